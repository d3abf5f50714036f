#include <clippers/server.hpp>

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = CLIPPERS_CLI;
const std::string kData = CLIPPERS_DATA_DIR;

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = "'" + kCli + "' " + args + " 2>&1";
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return {-1, ""};
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int status = ::pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        char tmpl[] = "/tmp/clippers-cli-XXXXXX";
        ASSERT_NE(::mkdtemp(tmpl), nullptr);
        dir_ = tmpl;
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string simulate(const std::string& out, const std::string& config, const std::string& seeds) {
        const auto r = run("simulate --path " + kData + "/paths/straight.json --config " + kData + "/config/" + config +
                           " --seeds " + seeds + " --out " + (dir_ / out).string());
        EXPECT_EQ(r.code, 0) << r.out;
        return r.out;
    }

    fs::path dir_;
};

} // namespace

TEST_F(CliTest, SimulateIsByteIdenticalAcrossRuns) {
    simulate("a", "default.json", "1..3");
    simulate("b", "default.json", "1..3");
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "a")) {
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename())) << e.path();
    }
    EXPECT_EQ(files, 6);
    EXPECT_TRUE(fs::exists(dir_ / "a" / "straight_seed2.trace"));
    EXPECT_TRUE(fs::exists(dir_ / "a" / "straight_seed2.metrics.json"));
}

TEST_F(CliTest, SeedListsAndRanges) {
    const auto out = simulate("s", "default.json", "1,4..5");
    EXPECT_NE(out.find("straight_seed1 "), std::string::npos);
    EXPECT_NE(out.find("straight_seed4 "), std::string::npos);
    EXPECT_NE(out.find("straight_seed5 "), std::string::npos);
    EXPECT_EQ(out.find("straight_seed2 "), std::string::npos);
    EXPECT_EQ(run("simulate --path " + kData + "/paths/straight.json --seeds 5..1").code, 2);
}

TEST_F(CliTest, ReplayAcceptsGoldenAndRejectsTampering) {
    simulate("g", "default.json", "7");
    const auto trace = dir_ / "g" / "straight_seed7.trace";
    EXPECT_EQ(run("replay " + trace.string()).code, 0);

    std::string text = slurp(trace);
    const auto at = text.find("\"left\":false");
    ASSERT_NE(at, std::string::npos);
    text.replace(at, 12, "\"left\":true ");
    std::ofstream(dir_ / "bad.trace", std::ios::binary) << text;
    const auto r = run("replay " + (dir_ / "bad.trace").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("MISMATCH"), std::string::npos);

    std::ofstream(dir_ / "junk.trace") << "not a trace\n";
    EXPECT_EQ(run("replay " + (dir_ / "junk.trace").string()).code, 1);
    EXPECT_EQ(run("replay " + (dir_ / "missing.trace").string()).code, 2);
}

TEST_F(CliTest, BadConfigFieldIsNamed) {
    std::ofstream(dir_ / "bad.json") << R"({"feedback": {"min_display_severe_ms": -5}})";
    const auto r = run("simulate --path " + kData + "/paths/straight.json --config " + (dir_ / "bad.json").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("min_display_severe_ms"), std::string::npos) << r.out;

    std::ofstream(dir_ / "typo.json") << R"({"behaviour": {}})";
    const auto t = run("simulate --path " + kData + "/paths/straight.json --config " + (dir_ / "typo.json").string());
    EXPECT_EQ(t.code, 2);
    EXPECT_NE(t.out.find("behaviour"), std::string::npos) << t.out;
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("simulate").code, 2);
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("report '" + (dir_ / "none*.trace").string() + "'").code, 2);
}

TEST_F(CliTest, ReportCountsEscalationsForUncorrectedDrift) {
    simulate("d", "drift.json", "1..2");
    const auto r = run("report '" + (dir_ / "d" / "*.trace").string() + "' --out json");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    for (const auto& [name, m] : j["traces"].items()) {
        EXPECT_EQ(m["escalation_count"], 2) << name;
        EXPECT_EQ(m["truncated"], true);
        // 4 mm/s reaches the 6 mm moderate offset after 1500 ms: ticks 0..1480
        EXPECT_EQ(m["ticks"], 401);
        EXPECT_DOUBLE_EQ(m["on_track_fraction"].get<double>(), 75.0 / 401.0);
    }
    EXPECT_EQ(j["aggregate"]["escalation_count"], 4);
    EXPECT_EQ(j["aggregate"]["ticks"], 802);

    const auto table = run("report '" + (dir_ / "d" / "*.trace").string() + "'");
    EXPECT_NE(table.out.find("ALL (2)"), std::string::npos);
}

TEST(CliServeTest, ServesASessionAndStopsOnSigterm) {
    int pipefd[2];
    ASSERT_EQ(::pipe(pipefd), 0);
    const pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        ::dup2(pipefd[1], STDOUT_FILENO);
        ::close(pipefd[0]);
        const std::string path = kData + "/paths/straight.json";
        ::execl(kCli.c_str(), kCli.c_str(), "serve", "--path", path.c_str(), "--mode", "oracle", "--port", "0",
                static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(pipefd[1]);
    std::string banner;
    char c;
    while (::read(pipefd[0], &c, 1) == 1 && c != '\n') banner += c;
    const auto colon = banner.rfind(':');
    ASSERT_NE(colon, std::string::npos) << banner;
    EXPECT_EQ(banner.substr(0, colon), "listening on 127.0.0.1");
    const int port = std::stoi(banner.substr(colon + 1));

    using namespace clippers::session;
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    std::string req = encode({Kind::StartSession, {}});
    for (clippers::Millis t = 0; t <= 12000; t += 20) {
        req += encode({Kind::PoseUpdate, {{"t", t}, {"x", 0.02 * static_cast<double>(t)}, {"y", 0.0}, {"heading", 0.0}}});
    }
    ASSERT_TRUE(send_all(fd, req));
    MessageReader reader;
    std::vector<Message> got;
    char buf[4096];
    ssize_t n;
    while ((got.empty() || got.back().kind != Kind::EndSession) && (n = ::recv(fd, buf, sizeof buf, 0)) > 0) {
        for (auto& m : reader.feed(std::string_view(buf, static_cast<std::size_t>(n)))) got.push_back(m);
    }
    ::close(fd);
    ASSERT_FALSE(got.empty());
    EXPECT_EQ(got.back().body["reason"], "completed");

    ::kill(pid, SIGTERM);
    int status = 0;
    ::waitpid(pid, &status, 0);
    ::close(pipefd[0]);
    EXPECT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 0);
}
