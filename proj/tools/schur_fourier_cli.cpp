// Batch driver: every pipeline is a subcommand taking a JSON config and
// emitting JSONL (or CSV) records. Identical config + seed gives
// byte-identical output; every record carries the config hash and version.

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "schur_fourier/fourier.hpp"
#include "schur_fourier/functionals.hpp"
#include "schur_fourier/geometry.hpp"
#include "schur_fourier/json_io.hpp"
#include "schur_fourier/laws.hpp"
#include "schur_fourier/schur.hpp"
#include "schur_fourier/version.hpp"

namespace {

using sf::json;

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// One output record: ordered key/value pairs, values already rendered.
class Record {
public:
    void add(const std::string& key, double v) { kv_.emplace_back(key, fmt_double(v)); }
    void add(const std::string& key, int v) { kv_.emplace_back(key, std::to_string(v)); }
    void add(const std::string& key, std::uint64_t v) { kv_.emplace_back(key, std::to_string(v)); }
    void add(const std::string& key, bool v) { kv_.emplace_back(key, v ? "true" : "false"); }
    void add_string(const std::string& key, const std::string& v) {
        kv_.emplace_back(key, "\"" + v + "\"");
    }
    void add(const std::string& key, const std::vector<double>& vs) {
        std::string s = "[";
        for (std::size_t i = 0; i < vs.size(); ++i) {
            if (i) s += ",";
            s += fmt_double(vs[i]);
        }
        kv_.emplace_back(key, s + "]");
    }
    const std::vector<std::pair<std::string, std::string>>& items() const { return kv_; }

private:
    std::vector<std::pair<std::string, std::string>> kv_;
};

class Writer {
public:
    Writer(const std::string& path, const std::string& format) : format_(format) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw sf::Error("cannot open output file: " + path);
        }
    }
    std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

    void write(const Record& rec) {
        if (format_ == "csv") {
            if (!header_done_) {
                bool first = true;
                for (const auto& [k, v] : rec.items()) {
                    if (!first) out() << ",";
                    out() << k;
                    first = false;
                }
                out() << "\n";
                header_done_ = true;
            }
            bool first = true;
            for (const auto& [k, v] : rec.items()) {
                if (!first) out() << ",";
                std::string cell = v;
                if (cell.find(',') != std::string::npos) cell = "\"" + cell + "\"";
                out() << cell;
                first = false;
            }
            out() << "\n";
            return;
        }
        out() << "{";
        bool first = true;
        for (const auto& [k, v] : rec.items()) {
            if (!first) out() << ",";
            out() << "\"" << k << "\":" << v;
            first = false;
        }
        out() << "}\n";
    }

private:
    std::string format_;
    std::ofstream file_;
    bool header_done_ = false;
};

struct Common {
    std::string config_path;
    std::string out_path;
    std::string format = "jsonl";
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;

    json config;
    std::string config_hash;

    void load() {
        std::ifstream in(config_path);
        if (!in) throw sf::Error("cannot read config file: " + config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string bytes = ss.str();
        config_hash = fnv1a_hex(bytes);
        config = json::parse(bytes);
        if (seed_override) config["seed"] = *seed_override;
    }

    std::uint64_t seed() const {
        if (!config.contains("seed"))
            throw sf::SpecError("config: a seed is mandatory for stochastic runs");
        return config.at("seed").get<std::uint64_t>();
    }

    void stamp(Record& rec) const {
        rec.add_string("config_hash", config_hash);
        rec.add_string("version", sf::kVersion);
    }
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON config path")->required();
    cmd->add_option("--seed", c.seed_override, "override the config seed");
    cmd->add_option("--out", c.out_path, "output path (default stdout)");
    cmd->add_option("--format", c.format, "jsonl|csv")->check(CLI::IsMember({"jsonl", "csv"}));
    cmd->add_flag("--quiet", c.quiet, "suppress the progress note on stderr");
}

std::vector<std::vector<double>> weight_grid(const json& cfg, const char* key = "weights") {
    std::vector<std::vector<double>> grid;
    const auto& j = cfg.at(key);
    if (j.empty()) throw sf::SpecError("config: empty weight grid");
    if (j.front().is_number()) {
        grid.push_back(j.get<std::vector<double>>());
    } else {
        for (const auto& row : j) grid.push_back(row.get<std::vector<double>>());
    }
    return grid;
}

// ---------------------------------------------------------------- condition

void run_condition(const Common& c, Writer& w) {
    const auto law = sf::law_from_json(c.config.at("law"));
    const double q = c.config.at("q").get<double>();
    const double tol = c.config.value("tol", 1e-9);
    std::vector<double> r_grid = c.config.contains("r_grid")
                                     ? c.config.at("r_grid").get<std::vector<double>>()
                                     : sf::default_r_grid();
    auto dirs = sf::default_directions(law.dim(), c.config.value("direction_seed", 2024));
    if (c.config.contains("directions")) {
        dirs.clear();
        for (const auto& d : c.config.at("directions")) dirs.push_back(d.get<std::vector<double>>());
    }
    const auto verdict = sf::condition_check(law, q, dirs, r_grid, tol);
    Record rec;
    rec.add_string("op", "condition");
    rec.add("q", q);
    rec.add_string("verdict", sf::to_string(verdict.verdict));
    rec.add("max_convexity_violation", verdict.max_convexity_violation);
    rec.add("max_concavity_violation", verdict.max_concavity_violation);
    rec.add("grid_points", verdict.grid_points);
    rec.add("directions", verdict.directions);
    rec.add("tol", tol);
    c.stamp(rec);
    w.write(rec);
}

// ---------------------------------------------------------------- section

void run_section(const Common& c, Writer& w) {
    const auto law = sf::law_from_json(c.config.at("law"));
    const auto quad = sf::quad_from_json(c.config.value("quad", json()));
    const std::string mode = c.config.value("mode", "zero");
    if (mode == "codim") {
        const auto rows = c.config.at("frame").get<std::vector<std::vector<double>>>();
        Eigen::MatrixXd frame(rows.size(), rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t cc = 0; cc < rows[r].size(); ++cc) frame(r, cc) = rows[r][cc];
        const double v = sf::codim_section(law, frame, quad);
        Record rec;
        rec.add_string("op", "codim_section");
        rec.add("k", rows.size());
        rec.add("value", v);
        c.stamp(rec);
        w.write(rec);
        return;
    }
    const auto grid = weight_grid(c.config, "ys");
    std::vector<double> t;
    if (c.config.contains("t")) t = c.config.at("t").get<std::vector<double>>();
    for (const auto& y : grid) {
        Record rec;
        rec.add_string("op", mode == "at" ? "section_at" : "section_zero");
        rec.add("y", y);
        double v;
        if (mode == "at") {
            rec.add("t", t);
            v = sf::section_at(law, y, t, quad);
        } else {
            v = sf::section_zero(law, y, quad);
        }
        rec.add("value", v);
        c.stamp(rec);
        w.write(rec);
    }
}

// ----------------------------------------------------- functionals by name

std::function<double(std::span<const double>)> named_functional(const Common& c) {
    const auto& f = c.config.at("functional");
    const std::string name = f.at("name").get<std::string>();
    if (name == "section_sqrt") {
        // a -> S(sqrt a) for the configured law
        auto law = sf::law_from_json(f.at("law"));
        auto quad = sf::quad_from_json(f.value("quad", json()));
        return [law, quad](std::span<const double> a) {
            std::vector<double> y(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) y[i] = std::sqrt(a[i]);
            return sf::section_zero(law, y, quad);
        };
    }
    if (name == "bochner") {
        auto law = sf::law_from_json(f.at("law"));
        auto nu = sf::spectral_from_json(f.at("nu"));
        const double q = f.at("q").get<double>();
        return [law, nu, q](std::span<const double> a) {
            return sf::h_functional_bochner(law, nu, a, q);
        };
    }
    if (name == "bpn_block_section") {
        auto body = sf::body_from_json(f.at("body"));
        const double p = f.at("p").get<double>();
        auto quad = sf::quad_from_json(f.value("quad", json()));
        const bool sqrt_arg = f.value("sqrt", true);
        return [body, p, quad, sqrt_arg](std::span<const double> a) {
            std::vector<double> th(a.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                th[i] = sqrt_arg ? std::sqrt(a[i]) : a[i];
            return sf::bpn_block_section(body, p, th, quad);
        };
    }
    throw sf::SpecError("config: unknown functional \"" + name + "\"");
}

void run_schur_test(const Common& c, Writer& w) {
    auto f = named_functional(c);
    const std::string mode = c.config.at("mode").get<std::string>();
    const double tol = c.config.value("tol", 1e-9);
    Record rec;
    rec.add_string("op", "schur-test");
    rec.add_string("mode", mode);
    if (mode == "schur-convex" || mode == "schur-concave") {
        const int n = c.config.at("n").get<int>();
        const int trials = c.config.at("trials").get<int>();
        const auto rep = sf::test_schur(f, n, trials, tol, c.seed(), mode == "schur-convex"
                                                                        ? sf::SchurMode::Convex
                                                                        : sf::SchurMode::Concave);
        rec.add("trials", rep.trials);
        rec.add("violations", rep.violations);
        rec.add("max_gap", rep.max_gap);
        rec.add("value_barycenter", rep.value_barycenter);
        rec.add("value_vertex", rep.value_vertex);
        rec.add("ok", rep.ok);
    } else if (mode == "log-convex-midpoint") {
        const int n = c.config.at("n").get<int>();
        const int trials = c.config.at("trials").get<int>();
        std::vector<sf::MajorizationPair> pairs;
        for (int t = 0; t < trials; ++t)
            pairs.push_back(sf::random_comparable_pair(n, sf::splitmix64(c.seed() + 977 * t)));
        const auto rep = sf::test_log_convex_midpoint(f, pairs, tol);
        rec.add("pairs", rep.pairs);
        rec.add("violations", rep.violations);
        rec.add("max_gap", rep.max_gap);
        rec.add("ok", rep.ok);
    } else if (mode == "schur-ostrowski") {
        const auto point = c.config.at("point").get<std::vector<double>>();
        const bool concave = c.config.value("concave", false);
        const auto rep = sf::schur_ostrowski_check(f, point, c.config.value("fd_step", 0.0), tol,
                                                   concave);
        rec.add("ok", rep.ok);
        rec.add("worst_violation", rep.worst_violation);
        rec.add("worst_i", rep.worst_i);
        rec.add("worst_j", rep.worst_j);
    } else {
        throw sf::SpecError("config: unknown schur-test mode \"" + mode + "\"");
    }
    rec.add("tol", tol);
    c.stamp(rec);
    w.write(rec);
}

// ---------------------------------------------------------------- moments

void write_estimate(Record& rec, const sf::McEstimate& est) {
    rec.add("estimate", est.estimate);
    rec.add("stderr", est.stderr_);
    rec.add("n_samples", est.n_samples);
    rec.add("n_blocks", est.n_blocks);
    rec.add("seed", est.seed);
    rec.add("unstable", est.unstable);
}

void run_moments(const Common& c, Writer& w) {
    const std::string op = c.config.value("op", "moment");
    const auto law = sf::law_from_json(c.config.at("law"));
    const double q = c.config.value("q", 2.0);
    const std::size_t n_samples = c.config.at("N").get<std::size_t>();
    if (op == "moment") {
        const auto body = c.config.contains("body") ? sf::body_from_json(c.config.at("body"))
                                                    : sf::StarBody::euclidean(law.dim());
        const double p = c.config.at("p").get<double>();
        std::uint64_t k = 0;
        for (const auto& a : weight_grid(c.config)) {
            const auto est =
                sf::moment_mc(law, a, q, p, body, sf::splitmix64(c.seed() + 31 * k++), n_samples);
            Record rec;
            rec.add_string("op", "moment");
            rec.add("a", a);
            rec.add("q", q);
            rec.add("p", p);
            write_estimate(rec, est);
            c.stamp(rec);
            w.write(rec);
        }
    } else if (op == "laplace") {
        const double p = c.config.at("p").get<double>();
        const double lambda = c.config.at("lambda").get<double>();
        std::uint64_t k = 0;
        for (const auto& a : weight_grid(c.config)) {
            const auto est =
                sf::laplace_mc(law, a, q, p, lambda, sf::splitmix64(c.seed() + 37 * k++), n_samples);
            Record rec;
            rec.add_string("op", "laplace");
            rec.add("a", a);
            rec.add("q", q);
            rec.add("p", p);
            rec.add("lambda", lambda);
            write_estimate(rec, est);
            c.stamp(rec);
            w.write(rec);
        }
    } else if (op == "neg-moment-probe") {
        const auto body = c.config.contains("body") ? sf::body_from_json(c.config.at("body"))
                                                    : sf::StarBody::euclidean(law.dim());
        const double l = c.config.at("l").get<double>();
        const int n = c.config.at("n").get<int>();
        const int count = c.config.at("pairs").get<int>();
        std::vector<sf::MajorizationPair> pairs;
        for (int t = 0; t < count; ++t)
            pairs.push_back(sf::random_comparable_pair(n, sf::splitmix64(c.seed() + 101 * t)));
        const auto rep =
            sf::neg_moment_logconvexity_probe(law, body, l, pairs, c.seed(), n_samples, q);
        for (const auto& row : rep.pairs) {
            Record rec;
            rec.add_string("op", "neg-moment-probe");
            rec.add("a", row.a);
            rec.add("b", row.b);
            rec.add("l", l);
            rec.add("m_a", row.at_a.estimate);
            rec.add("m_b", row.at_b.estimate);
            rec.add("m_mid", row.at_mid.estimate);
            rec.add("gap", row.gap);
            rec.add("gap_stderr", row.gap_stderr);
            rec.add("violated", row.violated);
            rec.add("unstable",
                    row.at_a.unstable || row.at_b.unstable || row.at_mid.unstable);
            c.stamp(rec);
            w.write(rec);
        }
        Record rec;
        rec.add_string("op", "neg-moment-probe-summary");
        rec.add("pairs", rep.pairs.size());
        rec.add("violations", rep.violations);
        rec.add("any_unstable", rep.any_unstable);
        c.stamp(rec);
        w.write(rec);
    } else {
        throw sf::SpecError("config: unknown moments op \"" + op + "\"");
    }
}

// ---------------------------------------------------------------- khinchin

void run_khinchin(const Common& c, Writer& w) {
    const auto law = sf::law_from_json(c.config.at("law"));
    const double p = c.config.at("p").get<double>();
    const auto consts = sf::khinchin_constants(law, p);
    Record head;
    head.add_string("op", "khinchin-constants");
    head.add("p", p);
    head.add("c_gauss", consts.c_gauss);
    head.add("c_self", consts.c_self);
    c.stamp(head);
    w.write(head);
    if (!c.config.contains("n")) return;
    const int n = c.config.at("n").get<int>();
    const int trials = c.config.value("trials", 20);
    const std::size_t n_samples = c.config.at("N").get<std::size_t>();
    const auto rep = sf::khinchin_verify(law, p, n, trials, c.seed(), n_samples);
    for (const auto& tr : rep.trials) {
        Record rec;
        rec.add_string("op", "khinchin-trial");
        rec.add("theta", tr.theta);
        rec.add("norm_p", tr.norm_p);
        rec.add("stderr", tr.norm_p_stderr);
        rec.add("slack_lower", tr.slack_lower);
        rec.add("slack_upper", tr.slack_upper);
        rec.add("violated", tr.violated);
        c.stamp(rec);
        w.write(rec);
    }
    Record rec;
    rec.add_string("op", "khinchin-summary");
    rec.add_string("verdict", sf::to_string(rep.verdict));
    rec.add("sigma", rep.sigma);
    rec.add("violations", rep.violations);
    rec.add("worst_slack", rep.worst_slack);
    rec.add("clt_gap", rep.clt_gap);
    rec.add("clt_gap_stderr", rep.clt_gap_stderr);
    c.stamp(rec);
    w.write(rec);
}

// ---------------------------------------------------------------- pball

void run_pball(const Common& c, Writer& w) {
    const std::string op = c.config.value("op", "volume");
    const auto body = sf::body_from_json(c.config.at("body"));
    const double p = c.config.at("p").get<double>();
    const int n = c.config.at("n").get<int>();
    if (op == "volume") {
        const double vol_k = body.get_if<sf::DiscreteLpBody>() ? sf::discrete_lp_volume(body)
                                                               : sf::body_volume(body);
        Record rec;
        rec.add_string("op", "pball-volume");
        rec.add("n", n);
        rec.add("d", body.dim());
        rec.add("p", p);
        rec.add("vol_K", vol_k);
        rec.add("volume", sf::bpn_volume(n, body.dim(), p, vol_k));
        c.stamp(rec);
        w.write(rec);
    } else if (op == "cone" || op == "uniform") {
        const std::size_t count = c.config.at("count").get<std::size_t>();
        Record rec;
        rec.add_string("op", op == "cone" ? "pball-cone" : "pball-uniform");
        rec.add("n", n);
        rec.add("d", body.dim());
        rec.add("p", p);
        rec.add("count", count);
        if (op == "cone") {
            const auto batch = sf::sample_cone_bpnk(body, p, n, c.seed(), count);
            double m = 0.0, m2 = 0.0;
            for (double r : batch.radius_p) {
                m += r;
                m2 += r * r;
            }
            m /= count;
            rec.add("radius_p_mean", m);
            rec.add("radius_p_var", m2 / count - m * m);
        } else {
            const auto xs = sf::sample_uniform_bpnk(body, p, n, c.seed(), count);
            double m = 0.0;
            const int nd = n * body.dim();
            for (std::size_t i = 0; i < count; ++i)
                m += std::pow(
                    sf::bpn_norm(body, p, n, std::span<const double>(xs.data() + i * nd, nd)), p);
            rec.add("norm_p_mean", m / count);
        }
        rec.add("seed", c.seed());
        c.stamp(rec);
        w.write(rec);
    } else if (op == "block-section") {
        const auto quad = sf::quad_from_json(c.config.value("quad", json()));
        for (const auto& th : weight_grid(c.config, "thetas")) {
            Record rec;
            rec.add_string("op", "pball-block-section");
            rec.add("theta", th);
            rec.add("p", p);
            rec.add("value", sf::bpn_block_section(body, p, th, quad));
            c.stamp(rec);
            w.write(rec);
        }
    } else {
        throw sf::SpecError("config: unknown pball op \"" + op + "\"");
    }
}

// ------------------------------------------ uniform-ball-moments (negative
// block moments of a vector uniform on B_p^n(K))

void run_uniform_ball_moments(const Common& c, Writer& w) {
    const auto body = sf::body_from_json(c.config.at("body"));
    const double p = c.config.at("p").get<double>();
    const int n = c.config.at("n").get<int>();
    const double ell = c.config.at("l").get<double>();
    const std::size_t count = c.config.at("N").get<std::size_t>();
    const auto norm_body = c.config.contains("norm_body")
                               ? sf::body_from_json(c.config.at("norm_body"))
                               : sf::StarBody::euclidean(body.dim());
    const int d = body.dim();
    const auto xs = sf::sample_uniform_bpnk(body, p, n, c.seed(), count);
    for (const auto& a : weight_grid(c.config)) {
        if (static_cast<int>(a.size()) != n) throw sf::SpecError("config: weights must have n entries");
        std::vector<double> z(d);
        double acc = 0.0, acc2 = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            std::fill(z.begin(), z.end(), 0.0);
            for (int b = 0; b < n; ++b) {
                const double s = std::sqrt(a[b]);
                for (int j = 0; j < d; ++j) z[j] += s * xs[i * n * d + b * d + j];
            }
            const double v = std::pow(sf::norm_eval(norm_body, z), -ell);
            acc += v;
            acc2 += v * v;
        }
        const double mean = acc / count;
        Record rec;
        rec.add_string("op", "uniform-ball-moments");
        rec.add("a", a);
        rec.add("l", ell);
        rec.add("estimate", mean);
        rec.add("stderr", std::sqrt(std::max(0.0, acc2 / count - mean * mean) /
                                    static_cast<double>(count)));
        rec.add("n_samples", count);
        rec.add("seed", c.seed());
        c.stamp(rec);
        w.write(rec);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fourier conditions, sections, Schur monotonicity and Khinchin constants"};
    app.require_subcommand(1);

    Common c;
    const char* names[] = {"condition", "section",  "schur-test",
                           "moments",   "khinchin", "pball",
                           "uniform-ball-moments"};
    for (const char* name : names) add_common(app.add_subcommand(name), c);

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        c.load();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        Writer w(c.out_path, c.format);
        if (!c.quiet) std::cerr << "running " << sub << " (config " << c.config_hash << ")\n";
        if (sub == "condition")
            run_condition(c, w);
        else if (sub == "section")
            run_section(c, w);
        else if (sub == "schur-test")
            run_schur_test(c, w);
        else if (sub == "moments")
            run_moments(c, w);
        else if (sub == "khinchin")
            run_khinchin(c, w);
        else if (sub == "pball")
            run_pball(c, w);
        else
            run_uniform_ball_moments(c, w);
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sf::SpecError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        Writer w(c.out_path, c.format);
        Record rec;
        rec.add_string("error", e.what());
        rec.add_string("config_hash", c.config_hash);
        rec.add_string("version", sf::kVersion);
        w.write(rec);
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
