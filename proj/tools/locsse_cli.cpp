#include <fstream>
#include <iostream>
#include <regex>

#include "CLI11.hpp"
#include "locsse/workload.hpp"

using namespace locsse;

namespace {

void parse_dist(const std::string& s, WorkloadSpec& spec) {
    static const std::regex re(R"(^(uniform|zipf|single|adversarial-script)\((.*)\)$)");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw Error(ErrorCode::BadSpec, "bad --dist " + s);
    const std::string kind = m[1], arg = m[2];
    if (kind == "adversarial-script") {
        spec.dist = Distribution::Script;
        spec.script_path = arg;
        return;
    }
    spec.dist = kind == "uniform" ? Distribution::Uniform : kind == "zipf" ? Distribution::Zipf : Distribution::Single;
    try {
        spec.dist_param = std::stod(arg);
    } catch (const std::exception&) {
        throw Error(ErrorCode::BadSpec, "bad --dist parameter " + arg);
    }
}

void parse_mix(const std::string& s, WorkloadSpec& spec) {
    static const std::regex re(R"(^(\d+)/(\d+)/(\d+)$)");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw Error(ErrorCode::BadSpec, "bad --mix " + s + " (want search/add/delete)");
    spec.search_pct = std::stoi(m[1]);
    spec.add_pct = std::stoi(m[2]);
    spec.delete_pct = std::stoi(m[3]);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Page-efficient and local SSE workbench"};
    WorkloadSpec spec;
    spec.N = 1 << 14;
    spec.ops = 2000;
    std::string scheme = "layered", dist = "uniform(4)", mix = "40/40/20", delta = "logloglog", rtt = "two";
    std::string out, gen_db_path;
    app.add_option("--seed", spec.seed, "experiment seed")->capture_default_str();
    app.add_option("--n", spec.N, "database size N (ORAM: block count n)")->capture_default_str();
    app.add_option("--p", spec.p, "page size in words")->capture_default_str();
    app.add_option("--scheme", scheme, "layered | clip | local-layered | loc-oram-demo | alloc-stats")->capture_default_str();
    app.add_option("--dist", dist, "uniform(l) | zipf(s) | single(l) | adversarial-script(path)")->capture_default_str();
    app.add_option("--ops", spec.ops, "operation count")->capture_default_str();
    app.add_option("--mix", mix, "search/add/delete percentages")->capture_default_str();
    app.add_option("--fill", spec.fill, "initial database size as a fraction of N")->capture_default_str();
    app.add_flag("--cap-longest", spec.cap_longest, "clamp lists to N/(log2 N)^d");
    app.add_option("--alpha", spec.alpha, "bucket capacity constant")->capture_default_str();
    app.add_option("--d", spec.d, "long-list exponent")->capture_default_str();
    app.add_option("--load-const", spec.load_const, "bin capacity constant")->capture_default_str();
    app.add_option("--delta-mode", delta, "one | logloglog")->capture_default_str();
    app.add_option("--lambda", spec.lambda, "security parameter for delta")->capture_default_str();
    app.add_option("--rtt", rtt, "two | piggyback")->capture_default_str();
    app.add_option("--trials", spec.trials, "alloc-stats trial count")->capture_default_str();
    app.add_option("--c", spec.oram_c, "ORAM level count")->capture_default_str();
    app.add_option("--beta", spec.oram_beta, "ORAM block words (0 = default)")->capture_default_str();
    app.add_option("--out", out, "CSV output path (default stdout)");
    app.add_option("--gen-db", gen_db_path, "write the generated database file and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(RunStatus::BadSpec);
    }

    try {
        spec.scheme = parse_scheme(scheme);
        parse_dist(dist, spec);
        parse_mix(mix, spec);
        if (delta != "one" && delta != "logloglog") throw Error(ErrorCode::BadSpec, "bad --delta-mode " + delta);
        spec.delta_mode = delta == "one" ? DeltaMode::One : DeltaMode::LogLogLog;
        if (rtt != "two" && rtt != "piggyback") throw Error(ErrorCode::BadSpec, "bad --rtt " + rtt);
        spec.piggyback = rtt == "piggyback";
        validate(spec);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return static_cast<int>(RunStatus::BadSpec);
    }

    if (!gen_db_path.empty()) {
        std::ofstream f(gen_db_path, std::ios::binary);
        if (!f) {
            std::cerr << "cannot write " << gen_db_path << '\n';
            return static_cast<int>(RunStatus::BadSpec);
        }
        write_db(f, gen_db(spec));
        return 0;
    }

    RunResult res;
    try {
        res = run(spec);
    } catch (const Error& e) {
        std::cerr << "scheme " << scheme << " failed: " << e.what() << '\n';
        return static_cast<int>(RunStatus::CorrectnessFailure);
    }
    if (out.empty()) {
        write_report_csv(std::cout, res.rows);
    } else {
        std::ofstream f(out);
        if (!f) {
            std::cerr << "cannot write " << out << '\n';
            return static_cast<int>(RunStatus::BadSpec);
        }
        write_report_csv(f, res.rows);
    }
    if (res.status != RunStatus::Ok) std::cerr << res.message << '\n';
    std::cerr << scheme << ": " << res.rows.size() << " rows, " << res.searches << " searches checked, "
              << res.mismatches << " mismatches, " << res.overflows << " overflows\n";
    return static_cast<int>(res.status);
}
