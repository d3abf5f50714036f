// clippers: headless sessions, golden replay, metrics reports and the
// session server for the UI.
//
// Exit codes: 0 success, 1 replay mismatch or unreadable trace, 2 usage,
// configuration or missing-file errors.

#include <clippers/config.hpp>
#include <clippers/server.hpp>
#include <clippers/simulation.hpp>

#include <CLI11.hpp>

#include <glob.h>
#include <signal.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace clippers;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// "1..10", "4", "1,3,5..7"
std::vector<std::uint64_t> parse_seeds(const std::string& list) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(list);
    std::string part;
    auto number = [&](const std::string& s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
            throw UsageError("--seeds: bad seed \"" + s + "\" in \"" + list + "\"");
        }
        return std::stoull(s);
    };
    while (std::getline(ss, part, ',')) {
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            out.push_back(number(part));
            continue;
        }
        const auto lo = number(part.substr(0, dots));
        const auto hi = number(part.substr(dots + 2));
        if (hi < lo) throw UsageError("--seeds: empty range \"" + part + "\"");
        if (hi - lo > 100000) throw UsageError("--seeds: range \"" + part + "\" is too large");
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
    if (out.empty()) throw UsageError("--seeds: no seeds given");
    return out;
}

std::string slurp(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw UsageError(file + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& file, const std::string& bytes) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError(file.string() + ": cannot write");
    out << bytes;
    if (!out.flush()) throw UsageError(file.string() + ": write failed");
}

SessionConfig config_or_default(const std::string& file, const std::string& mode) {
    SessionConfig cfg = file.empty() ? SessionConfig{} : load_config(file);
    if (!mode.empty()) cfg.mode = parse_mode(mode);
    return cfg;
}

struct SimulateOpts {
    std::string path, config, seeds = "1", out = ".", mode;
};

int simulate(const SimulateOpts& o) {
    const LinePath path = load_path(o.path);
    const SessionConfig cfg = config_or_default(o.config, o.mode);
    cfg.validate_for(path);
    const auto seeds = parse_seeds(o.seeds);
    fs::create_directories(o.out);
    const std::string stem = fs::path(o.path).stem().string();
    std::vector<std::pair<std::string, MetricsReport>> rows;
    for (auto seed : seeds) {
        const auto trace = run_behavior(path, cfg, seed);
        const std::string name = stem + "_seed" + std::to_string(seed);
        const auto m = metrics(trace);
        write_file(fs::path(o.out) / (name + ".trace"), write_trace(trace));
        write_file(fs::path(o.out) / (name + ".metrics.json"), metrics_to_json(m).dump(2) + "\n");
        rows.emplace_back(name, m);
    }
    std::cout << metrics_table(rows);
    return 0;
}

int replay_files(const std::vector<std::string>& files) {
    int worst = 0;
    for (const auto& f : files) {
        std::string text;
        try {
            text = slurp(f);
        } catch (const UsageError& e) {
            std::cerr << e.what() << "\n";
            worst = 2;
            continue;
        }
        try {
            const auto r = replay(text);
            if (r.ok()) {
                std::cout << f << ": ok (" << r.recomputed.records.size() << " records)\n";
                continue;
            }
            std::cout << f << ": MISMATCH\n";
            for (std::size_t i = 0; i < r.mismatches.size() && i < 10; ++i) std::cout << "  " << r.mismatches[i] << "\n";
            if (r.mismatches.size() > 10) std::cout << "  ... " << r.mismatches.size() - 10 << " more\n";
        } catch (const ReplayError& e) {
            std::cout << f << ": refused: " << e.what() << "\n";
        } catch (const FormatError& e) {
            std::cout << f << ": unreadable: " << e.what() << "\n";
        } catch (const ConfigError& e) {
            std::cout << f << ": unreadable: " << e.what() << "\n";
        }
        worst = std::max(worst, 1);
    }
    return worst;
}

std::vector<std::string> expand(const std::vector<std::string>& patterns) {
    std::vector<std::string> out;
    for (const auto& p : patterns) {
        glob_t g{};
        if (::glob(p.c_str(), 0, nullptr, &g) == 0) {
            for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
        }
        ::globfree(&g);
    }
    return out;
}

int report(const std::vector<std::string>& patterns, const std::string& format) {
    const auto files = expand(patterns);
    if (files.empty()) throw UsageError("report: no trace files match");
    std::vector<std::pair<std::string, MetricsReport>> rows;
    std::vector<MetricsReport> all;
    int status = 0;
    for (const auto& f : files) {
        try {
            const auto m = metrics(recorded_trace(read_trace(slurp(f))));
            rows.emplace_back(fs::path(f).filename().string(), m);
            all.push_back(m);
        } catch (const FormatError& e) {
            std::cerr << f << ": " << e.what() << "\n";
            status = 1;
        } catch (const std::invalid_argument& e) {
            std::cerr << f << ": " << e.what() << "\n";
            status = 1;
        }
    }
    if (all.empty()) return status;
    const auto pooled = combine_metrics(all);
    if (format == "json") {
        Json j = Json::object();
        Json per = Json::object();
        for (const auto& [name, m] : rows) per[name] = metrics_to_json(m);
        j["traces"] = per;
        j["aggregate"] = metrics_to_json(pooled);
        std::cout << j.dump(2) << "\n";
    } else {
        rows.emplace_back("ALL (" + std::to_string(all.size()) + ")", pooled);
        std::cout << metrics_table(rows);
    }
    return status;
}

int serve(const std::string& path_file, const std::string& config_file, const std::string& mode, int port) {
    const LinePath path = load_path(path_file);
    const SessionConfig cfg = config_or_default(config_file, mode);
    // block before any thread starts so that only sigwait sees these
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    session::SessionServer server(path, cfg);
    const auto bound = server.listen(static_cast<std::uint16_t>(port));
    std::cout << "listening on 127.0.0.1:" << bound << std::endl;
    std::thread acceptor([&] { server.serve(); });
    int sig = 0;
    sigwait(&set, &sig);
    std::cout << "stopping" << std::endl;
    server.stop();
    acceptor.join();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chameleon scissors trainer: simulate, replay, report, serve"};
    app.require_subcommand(1);

    SimulateOpts sim;
    auto* s = app.add_subcommand("simulate", "Run seeded headless sessions and write traces");
    s->add_option("--path", sim.path, "Path JSON")->required();
    s->add_option("--config", sim.config, "Config JSON (defaults if omitted)");
    s->add_option("--seeds", sim.seeds, "Seeds, e.g. 1..10 or 1,3,5..7")->capture_default_str();
    s->add_option("--out", sim.out, "Output directory")->capture_default_str();
    s->add_option("--mode", sim.mode, "Override config mode")->check(CLI::IsMember({"sensor", "oracle"}));

    std::vector<std::string> replay_in;
    auto* r = app.add_subcommand("replay", "Recompute traces and compare them record by record");
    r->add_option("traces", replay_in, "Trace files")->required();

    std::vector<std::string> report_in;
    std::string report_format = "table";
    auto* rep = app.add_subcommand("report", "Metrics for trace files or globs, plus a pooled row");
    rep->add_option("traces", report_in, "Trace files or glob patterns")->required();
    rep->add_option("--out", report_format, "table or json")
        ->check(CLI::IsMember({"table", "json"}))
        ->capture_default_str();

    std::string serve_path, serve_config, serve_mode;
    int port = 7878;
    auto* sv = app.add_subcommand("serve", "Session protocol server on 127.0.0.1");
    sv->add_option("--path", serve_path, "Default path JSON")->required();
    sv->add_option("--config", serve_config, "Default config JSON");
    sv->add_option("--mode", serve_mode, "Override config mode")->check(CLI::IsMember({"sensor", "oracle"}));
    sv->add_option("--port", port, "TCP port, 0 for any free port")->check(CLI::Range(0, 65535))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*s) return simulate(sim);
        if (*r) return replay_files(replay_in);
        if (*rep) return report(report_in, report_format);
        if (*sv) return serve(serve_path, serve_config, serve_mode, port);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
