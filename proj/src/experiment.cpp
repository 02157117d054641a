#include "pbda/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pbda/divergences.hpp"
#include "pbda/random.hpp"
#include "pbda/stochastic.hpp"

namespace pbda {

void ExperimentConfig::validate() const {
    if (synthetic.has_value() == task_manifest.has_value()) {
        throw std::invalid_argument("config: give exactly one of task.synthetic or task.manifest");
    }
    if (synthetic) synthetic->validate();
    arch.validate();
    if (alphas.empty()) throw std::invalid_argument("config: at least one alpha required");
    for (double a : alphas) {
        if (!(a >= 0.0 && a < 1.0)) throw std::invalid_argument("config: alpha must lie in [0,1)");
    }
    if (!(sigma > 0.0)) throw std::invalid_argument("config: sigma must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("config: delta must lie in (0,1)");
    if (posterior_pairs == 0) throw std::invalid_argument("config: posterior_pairs must be >= 1");
    if (bounds.empty()) throw std::invalid_argument("config: no bounds requested");
    for (BoundName b : bounds) {
        if (b == BoundName::add && !oracle_mode) {
            throw std::invalid_argument(
                "config: the add bound needs target labels (lambda_rho); set oracle_mode to true to request it");
        }
    }
    for (const auto& [b, g] : grids) g.validate();
    if (mmd_shuffles == 0) throw std::invalid_argument("config: mmd shuffles must be >= 1");
    if (!(kernel_bound > 0.0)) throw std::invalid_argument("config: kernel_bound must be > 0");
    prior_training.validate();
    posterior_training.validate();
    if (seeds.empty()) throw std::invalid_argument("config: at least one seed required");
}

ParamGrid ExperimentConfig::grid_for(BoundName b) const {
    const auto it = grids.find(b);
    return it == grids.end() ? default_grid(b) : it->second;
}

namespace {

TrainConfig train_from_json(const nlohmann::json& j, TrainConfig base) {
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.momentum = j.value("momentum", base.momentum);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.epochs = j.value("epochs", base.epochs);
    return base;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    const auto& task = j.at("task");
    if (task.contains("synthetic")) cfg.synthetic = synthetic_spec_from_json(task.at("synthetic"));
    if (task.contains("manifest")) cfg.task_manifest = resolve(base_dir, task.at("manifest").get<std::string>());

    if (j.contains("arch")) {
        const auto& a = j.at("arch");
        cfg.arch.layer_widths = a.at("widths").get<std::vector<std::size_t>>();
        cfg.arch.activation = activation_from_string(a.value("activation", std::string("relu")));
    }
    if (j.contains("alpha")) {
        const auto& a = j.at("alpha");
        cfg.alphas = a.is_array() ? a.get<std::vector<double>>() : std::vector<double>{a.get<double>()};
    }
    cfg.sigma = j.value("sigma", cfg.sigma);
    cfg.delta = j.value("delta", cfg.delta);
    cfg.posterior_pairs = j.value("posterior_pairs", cfg.posterior_pairs);
    if (j.contains("bounds")) {
        cfg.bounds.clear();
        for (const auto& b : j.at("bounds")) cfg.bounds.push_back(bound_from_string(b.get<std::string>()));
    }
    cfg.oracle_mode = j.value("oracle_mode", cfg.oracle_mode);
    if (j.contains("grids")) {
        for (const auto& [name, axes] : j.at("grids").items()) {
            ParamGrid g;
            for (const auto& [param, values] : axes.items()) g.axes.emplace_back(param, values.get<std::vector<double>>());
            cfg.grids[bound_from_string(name)] = g;
        }
    }
    if (j.contains("mmd")) {
        const auto& m = j.at("mmd");
        cfg.mmd_shuffles = m.value("shuffles", cfg.mmd_shuffles);
        if (m.contains("bandwidths")) cfg.mmd_bandwidths = m.at("bandwidths").get<std::vector<double>>();
        cfg.kernel_bound = m.value("kernel_bound", cfg.kernel_bound);
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        if (t.contains("prior")) cfg.prior_training = train_from_json(t.at("prior"), cfg.prior_training);
        if (t.contains("posterior")) cfg.posterior_training = train_from_json(t.at("posterior"), cfg.posterior_training);
    }
    if (j.contains("checkpoints")) {
        const auto& c = j.at("checkpoints");
        cfg.schedule.first_epoch_checkpoints = c.value("first_epoch", cfg.schedule.first_epoch_checkpoints);
        cfg.schedule.per_epoch_after = c.value("per_epoch_after", cfg.schedule.per_epoch_after);
    }
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("output")) {
        const auto& o = j.at("output");
        if (o.contains("csv")) cfg.output_csv = resolve(base_dir, o.at("csv").get<std::string>());
        if (o.contains("json")) cfg.output_json = resolve(base_dir, o.at("json").get<std::string>());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    return config_from_json(nlohmann::json::parse(in), path.parent_path());
}

// ---- running ---------------------------------------------------------------------

namespace {

// Rethrows the active exception with `context` prepended, keeping the
// refusal types distinguishable for callers.
[[noreturn]] void rethrow_with(const std::string& context) {
    try {
        throw;
    } catch (const OracleRefusal& e) {
        throw OracleRefusal(context + e.what());
    } catch (const OverlapViolation& e) {
        throw OverlapViolation(context + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(context + e.what());
    }
}

struct SeedContext {
    TaskInstance task;
    double mmd = 0.0;
};

SeedContext prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed, const TaskInstance* fixed_task) {
    SeedContext ctx;
    if (cfg.synthetic) {
        SyntheticSpec spec = *cfg.synthetic;
        spec.seed = derive_seed(seed, "task");
        ctx.task = build_synthetic_task(spec);
    } else {
        ctx.task = *fixed_task;
    }
    const Matrix& X = ctx.task.source.features;
    const Matrix& Y = ctx.task.target_x.features;
    MmdConfig mmd;
    mmd.shuffles = cfg.mmd_shuffles;
    mmd.seed = derive_seed(seed, "mmd");
    mmd.bandwidths = cfg.mmd_bandwidths.empty() ? median_heuristic_bandwidths(X, Y, derive_seed(seed, "bandwidth"))
                                                : cfg.mmd_bandwidths;
    std::sort(mmd.bandwidths.begin(), mmd.bandwidths.end());
    // Input-space MMD does not depend on the hypothesis: one value per task.
    ctx.mmd = mmd_estimate(X, Y, mmd);
    return ctx;
}

void run_job(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t alpha_index, const SeedContext& ctx,
             RunReport& report) {
    const double alpha = cfg.alphas[alpha_index];
    const TaskInstance& task = ctx.task;
    const bool have_oracle = task.target_labeled_oracle.size() > 0;

    const PriorPosteriorPair pair =
        learn_prior_posterior(task.source, alpha, cfg.arch, cfg.prior_training, cfg.posterior_training, cfg.sigma,
                              derive_seed(seed, "pair"), cfg.schedule);

    for (std::size_t t = 0; t < pair.posterior_checkpoints.size(); ++t) try {
        const auto start = std::chrono::steady_clock::now();
        const auto& ck = pair.posterior_checkpoints[t];
        const PosteriorSampleSet samples = sample_posterior(
            ck.posterior, cfg.posterior_pairs, derive_seed(seed, "posterior-draws", alpha_index * 100000 + t));

        ReportRow row;
        row.seed = seed;
        row.alpha = alpha;
        row.checkpoint_index = t;
        row.seen_fraction = ck.seen_fraction;
        row.eval_size = pair.eval_set.size();
        row.n_target = task.target_x.size();
        row.kl = kl_isotropic(ck.posterior, pair.prior);
        row.mmd = ctx.mmd;
        row.estimates = estimate_risks(cfg.arch, samples, pair.eval_set, task.target_x,
                                       have_oracle ? &task.target_labeled_oracle : nullptr);

        BoundInputs in;
        in.m_source = row.eval_size;
        in.n_target = row.n_target;
        in.kl = row.kl;
        in.delta = cfg.delta;
        in.gibbs_risk = row.estimates.gibbs_risk.value;
        if (row.estimates.gibbs_weighted_risk) in.gibbs_weighted_risk = row.estimates.gibbs_weighted_risk->value;
        in.disagreement_source = row.estimates.disagreement_source.value;
        in.disagreement_target = row.estimates.disagreement_target.value;
        in.joint_error_source = row.estimates.joint_error_source.value;
        in.domain_disagreement = row.estimates.domain_disagreement.value;
        in.beta_inf = task.beta_inf;
        in.mmd_value = ctx.mmd;
        in.kernel_bound = cfg.kernel_bound;
        if (cfg.oracle_mode) {
            if (!row.estimates.joint_error_target) {
                throw OracleRefusal("oracle mode requested but the task has no labeled target sample");
            }
            in.oracle = BoundInputs::Oracle{
                std::abs(row.estimates.joint_error_target->value - row.estimates.joint_error_source.value)};
        }
        for (BoundName b : cfg.bounds) row.bounds.push_back(grid_search(b, in, cfg.grid_for(b)));
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.rows.push_back(std::move(row));
    } catch (const std::exception&) {
        rethrow_with("checkpoint " + std::to_string(t) + ": ");
    }
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::optional<TaskInstance> fixed;
    if (cfg.task_manifest) fixed = load_task(*cfg.task_manifest);
    for (BoundName b : cfg.bounds) {
        if (b == BoundName::iw && fixed && !fixed->source.weights) {
            throw std::invalid_argument("config: the iw bound needs exact importance weights on the source");
        }
    }

    RunReport report;
    for (std::uint64_t seed : cfg.seeds) {
        SeedContext ctx;
        try {
            ctx = prepare_seed(cfg, seed, fixed ? &*fixed : nullptr);
        } catch (const std::exception&) {
            rethrow_with("seed " + std::to_string(seed) + ": ");
        }
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
            try {
                run_job(cfg, seed, a, ctx, report);
            } catch (const std::exception&) {
                std::ostringstream os;
                os << "seed " << seed << ", alpha " << cfg.alphas[a] << ", ";
                rethrow_with(os.str());
            }
        }
    }
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& x, const ReportRow& y) {
        return std::tie(x.seed, x.alpha, x.checkpoint_index) < std::tie(y.seed, y.alpha, y.checkpoint_index);
    });
    return report;
}

// ---- report files ----------------------------------------------------------------

const std::vector<std::string>& report_csv_columns() {
    static const std::vector<std::string> cols = {
        "seed",          "alpha",           "checkpoint_index",    "seen_fraction",       "bound_name",
        "bound_value",   "param_json",      "delta_effective",     "gibbs_source_risk",   "gibbs_weighted_risk",
        "disagreement_source", "disagreement_target", "joint_error_source", "kl",        "mmd",
        "oracle_target_gibbs_risk", "oracle_used"};
    return cols;
}

std::vector<FlatRow> flatten(const RunReport& report) {
    std::vector<FlatRow> out;
    for (const auto& r : report.rows) {
        for (const auto& b : r.bounds) {
            FlatRow f;
            f.seed = r.seed;
            f.alpha = r.alpha;
            f.checkpoint_index = r.checkpoint_index;
            f.seen_fraction = r.seen_fraction;
            f.bound_name = to_string(b.name);
            f.bound_value = b.value;
            f.param_json = to_json(b).at("params").dump();
            f.delta_effective = b.delta_effective;
            f.gibbs_source_risk = r.estimates.gibbs_risk.value;
            if (r.estimates.gibbs_weighted_risk) f.gibbs_weighted_risk = r.estimates.gibbs_weighted_risk->value;
            f.disagreement_source = r.estimates.disagreement_source.value;
            f.disagreement_target = r.estimates.disagreement_target.value;
            f.joint_error_source = r.estimates.joint_error_source.value;
            f.kl = r.kl;
            f.mmd = r.mmd;
            if (r.estimates.target_gibbs_risk) f.oracle_target_gibbs_risk = r.estimates.target_gibbs_risk->value;
            f.oracle_used = b.oracle_used;
            out.push_back(std::move(f));
        }
    }
    return out;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string opt_num(const std::optional<double>& v) {
    return v ? num(*v) : std::string();
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::vector<std::string> parse_csv_record(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

std::optional<double> parse_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
}

nlohmann::json estimate_json(const Estimate& e) {
    return {{"value", e.value}, {"mc_std", e.mc_std}};
}

nlohmann::json opt_estimate_json(const std::optional<Estimate>& e) {
    return e ? estimate_json(*e) : nlohmann::json(nullptr);
}

}  // namespace

void write_report_csv(std::ostream& out, const RunReport& report) {
    const auto& cols = report_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& f : flatten(report)) {
        out << f.seed << ',' << num(f.alpha) << ',' << f.checkpoint_index << ',' << num(f.seen_fraction) << ','
            << f.bound_name << ',' << num(f.bound_value) << ',' << quote(f.param_json) << ',' << num(f.delta_effective)
            << ',' << num(f.gibbs_source_risk) << ',' << opt_num(f.gibbs_weighted_risk) << ','
            << num(f.disagreement_source) << ',' << num(f.disagreement_target) << ',' << num(f.joint_error_source)
            << ',' << num(f.kl) << ',' << num(f.mmd) << ',' << opt_num(f.oracle_target_gibbs_risk) << ','
            << (f.oracle_used ? "true" : "false") << '\n';
    }
}

std::vector<FlatRow> read_report_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("report CSV: missing header");
    if (parse_csv_record(line) != report_csv_columns()) throw std::runtime_error("report CSV: unexpected header");
    std::vector<FlatRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c = parse_csv_record(line);
        if (c.size() != report_csv_columns().size()) {
            throw std::runtime_error("report CSV line " + std::to_string(lineno) + ": wrong number of fields");
        }
        FlatRow f;
        try {
            f.seed = std::stoull(c[0]);
            f.alpha = std::stod(c[1]);
            f.checkpoint_index = std::stoull(c[2]);
            f.seen_fraction = std::stod(c[3]);
            f.bound_name = c[4];
            f.bound_value = std::stod(c[5]);
            f.param_json = c[6];
            f.delta_effective = std::stod(c[7]);
            f.gibbs_source_risk = std::stod(c[8]);
            f.gibbs_weighted_risk = parse_opt(c[9]);
            f.disagreement_source = std::stod(c[10]);
            f.disagreement_target = std::stod(c[11]);
            f.joint_error_source = std::stod(c[12]);
            f.kl = std::stod(c[13]);
            f.mmd = std::stod(c[14]);
            f.oracle_target_gibbs_risk = parse_opt(c[15]);
            if (c[16] != "true" && c[16] != "false") throw std::invalid_argument("oracle_used must be true or false");
            f.oracle_used = c[16] == "true";
        } catch (const std::exception& e) {
            throw std::runtime_error("report CSV line " + std::to_string(lineno) + ": " + e.what());
        }
        rows.push_back(std::move(f));
    }
    return rows;
}

nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        const auto& e = r.estimates;
        nlohmann::json bounds = nlohmann::json::array();
        for (const auto& b : r.bounds) bounds.push_back(to_json(b));
        rows.push_back({{"seed", r.seed},
                        {"alpha", r.alpha},
                        {"checkpoint_index", r.checkpoint_index},
                        {"seen_fraction", r.seen_fraction},
                        {"eval_size", r.eval_size},
                        {"n_target", r.n_target},
                        {"kl", r.kl},
                        {"mmd", r.mmd},
                        {"estimates",
                         {{"gibbs_risk", estimate_json(e.gibbs_risk)},
                          {"gibbs_weighted_risk", opt_estimate_json(e.gibbs_weighted_risk)},
                          {"disagreement_source", estimate_json(e.disagreement_source)},
                          {"disagreement_target", estimate_json(e.disagreement_target)},
                          {"joint_error_source", estimate_json(e.joint_error_source)},
                          {"domain_disagreement", estimate_json(e.domain_disagreement)}}},
                        {"oracle",
                         {{"joint_error_target", opt_estimate_json(e.joint_error_target)},
                          {"target_gibbs_risk", opt_estimate_json(e.target_gibbs_risk)}}},
                        {"bounds", bounds}});
    }
    return {{"schema", "pbda-report-v1"}, {"rows", rows}};
}

void emit(const RunReport& report, ReportFormat format, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report: " + path.string());
    if (format == ReportFormat::csv) {
        write_report_csv(out, report);
    } else {
        out << report_to_json(report).dump(2) << '\n';
    }
    if (!out) throw std::runtime_error("failed writing report: " + path.string());
}

// ---- summary ---------------------------------------------------------------------

std::vector<SummaryRow> report_summary(const std::vector<FlatRow>& rows) {
    std::map<std::tuple<std::uint64_t, double, std::string>, std::vector<const FlatRow*>> groups;
    for (const auto& r : rows) groups[{r.seed, r.alpha, r.bound_name}].push_back(&r);

    std::vector<SummaryRow> out;
    for (auto& [key, members] : groups) {
        std::stable_sort(members.begin(), members.end(),
                         [](const FlatRow* a, const FlatRow* b) { return a->checkpoint_index < b->checkpoint_index; });
        SummaryRow s;
        std::tie(s.seed, s.alpha, s.bound_name) = key;
        const FlatRow* best = members.front();
        for (const FlatRow* r : members) {
            if (r->bound_value < best->bound_value) best = r;
            if (r->oracle_target_gibbs_risk &&
                (!s.best_oracle_risk || *r->oracle_target_gibbs_risk < *s.best_oracle_risk)) {
                s.best_oracle_risk = r->oracle_target_gibbs_risk;
            }
        }
        s.min_value = best->bound_value;
        s.argmin_checkpoint = best->checkpoint_index;
        s.oracle_risk_at_min = best->oracle_target_gibbs_risk;
        out.push_back(s);
    }
    return out;
}

void print_summary(std::ostream& out, const std::vector<SummaryRow>& summary) {
    auto opt = [](const std::optional<double>& v) {
        std::ostringstream os;
        if (v) os << std::fixed << std::setprecision(4) << *v; else os << "-";
        return os.str();
    };
    out << std::left << std::setw(6) << "seed" << std::setw(8) << "alpha" << std::setw(12) << "bound" << std::setw(12)
        << "min_bound" << std::setw(12) << "checkpoint" << std::setw(16) << "target@min" << "best_target\n";
    for (const auto& s : summary) {
        std::ostringstream v;
        v << std::fixed << std::setprecision(4) << s.min_value;
        std::ostringstream a;
        a << s.alpha;
        out << std::left << std::setw(6) << s.seed << std::setw(8) << a.str() << std::setw(12) << s.bound_name
            << std::setw(12) << v.str() << std::setw(12) << s.argmin_checkpoint << std::setw(16)
            << opt(s.oracle_risk_at_min) << opt(s.best_oracle_risk) << '\n';
    }
}

}  // namespace pbda
