#include "pbda/tasks.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pbda/random.hpp"

namespace pbda {

namespace {

struct Normalized {
    std::vector<double> source, target;
};

Normalized normalized_weights(const SyntheticSpec& s) {
    Normalized n;
    double ss = 0.0, ts = 0.0;
    for (const auto& c : s.components) {
        ss += c.source_weight;
        ts += c.target_weight;
    }
    for (const auto& c : s.components) {
        n.source.push_back(c.source_weight / ss);
        n.target.push_back(c.target_weight / ts);
    }
    return n;
}

double log_sum_exp(const std::vector<double>& v) {
    double mx = -INFINITY;
    for (double x : v) mx = std::max(mx, x);
    if (mx == -INFINITY) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

void SyntheticSpec::validate() const {
    if (dim == 0) throw std::invalid_argument("SyntheticSpec: dim must be >= 1");
    if (components.empty()) throw std::invalid_argument("SyntheticSpec: at least one component required");
    double ss = 0.0, ts = 0.0;
    for (const auto& c : components) {
        if (c.mean.size() != dim) throw std::invalid_argument("SyntheticSpec: component mean has wrong dimension");
        if (!(c.source_weight >= 0.0) || !(c.target_weight >= 0.0)) {
            throw std::invalid_argument("SyntheticSpec: mixing weights must be >= 0");
        }
        if (c.target_weight > 0.0 && c.source_weight == 0.0) {
            throw OverlapViolation(
                "SyntheticSpec: a component has target mass but no source mass; the density ratio is unbounded");
        }
        ss += c.source_weight;
        ts += c.target_weight;
    }
    if (!(ss > 0.0) || !(ts > 0.0)) throw std::invalid_argument("SyntheticSpec: mixing weights must not all be 0");
    if (!(component_std > 0.0)) throw std::invalid_argument("SyntheticSpec: component_std must be > 0");
    if (label_normal.size() != dim) throw std::invalid_argument("SyntheticSpec: label_normal has wrong dimension");
    if (!(label_noise >= 0.0 && label_noise < 0.5)) throw std::invalid_argument("SyntheticSpec: label_noise must be in [0, 0.5)");
    if (!(label_sharpness >= 0.0) || !std::isfinite(label_sharpness)) {
        throw std::invalid_argument("SyntheticSpec: label_sharpness must be finite and >= 0");
    }
    if (n_source == 0 || n_target == 0) throw std::invalid_argument("SyntheticSpec: sample sizes must be >= 1");
}

double SyntheticSpec::density_ratio(std::span<const double> x) const {
    if (x.size() != dim) throw std::invalid_argument("density_ratio: dimension mismatch");
    const Normalized w = normalized_weights(*this);
    std::vector<double> ls, lt;
    for (std::size_t k = 0; k < components.size(); ++k) {
        double sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = x[i] - components[k].mean[i];
            sq += d * d;
        }
        const double lphi = -sq / (2.0 * component_std * component_std);
        ls.push_back(w.source[k] > 0.0 ? std::log(w.source[k]) + lphi : -INFINITY);
        lt.push_back(w.target[k] > 0.0 ? std::log(w.target[k]) + lphi : -INFINITY);
    }
    return std::exp(log_sum_exp(lt) - log_sum_exp(ls));
}

double SyntheticSpec::beta_infinity() const {
    const Normalized w = normalized_weights(*this);
    double b = 0.0;
    for (std::size_t k = 0; k < components.size(); ++k) {
        if (w.source[k] > 0.0) b = std::max(b, w.target[k] / w.source[k]);
    }
    return b;
}

Label SyntheticSpec::label_rule(std::span<const double> x) const {
    double s = label_offset;
    for (std::size_t i = 0; i < dim; ++i) s += label_normal[i] * x[i];
    return s > 0.0 ? 1 : 0;
}

double SyntheticSpec::positive_probability(std::span<const double> x) const {
    double p = 0.0;
    if (label_sharpness > 0.0) {
        double s = label_offset;
        for (std::size_t i = 0; i < dim; ++i) s += label_normal[i] * x[i];
        p = 1.0 / (1.0 + std::exp(-label_sharpness * s));
    } else {
        p = label_rule(x);
    }
    return (1.0 - label_noise) * p + label_noise * (1.0 - p);
}

SyntheticSpec SyntheticSpec::default_2d() {
    SyntheticSpec s;
    s.dim = 2;
    s.components = {{{-1.5, 0.0}, 0.85, 0.15}, {{1.5, 0.0}, 0.15, 0.85}};
    s.component_std = 1.0;
    s.label_normal = {1.0, 1.0};
    s.label_offset = 0.0;
    s.label_noise = 0.0;
    s.label_sharpness = 2.0;
    return s;
}

nlohmann::json to_json(const SyntheticSpec& s) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : s.components) {
        comps.push_back({{"mean", c.mean}, {"source_weight", c.source_weight}, {"target_weight", c.target_weight}});
    }
    return {{"dim", s.dim},
            {"components", comps},
            {"component_std", s.component_std},
            {"label_normal", s.label_normal},
            {"label_offset", s.label_offset},
            {"label_noise", s.label_noise},
            {"label_sharpness", s.label_sharpness},
            {"n_source", s.n_source},
            {"n_target", s.n_target},
            {"n_oracle", s.n_oracle},
            {"seed", s.seed}};
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
    SyntheticSpec s = SyntheticSpec::default_2d();
    if (j.contains("dim")) s.dim = j.at("dim").get<std::size_t>();
    if (j.contains("components")) {
        s.components.clear();
        for (const auto& c : j.at("components")) {
            s.components.push_back({c.at("mean").get<std::vector<double>>(), c.at("source_weight").get<double>(),
                                    c.at("target_weight").get<double>()});
        }
    }
    if (j.contains("component_std")) s.component_std = j.at("component_std").get<double>();
    if (j.contains("label_normal")) s.label_normal = j.at("label_normal").get<std::vector<double>>();
    if (j.contains("label_offset")) s.label_offset = j.at("label_offset").get<double>();
    if (j.contains("label_noise")) s.label_noise = j.at("label_noise").get<double>();
    if (j.contains("label_sharpness")) s.label_sharpness = j.at("label_sharpness").get<double>();
    if (j.contains("n_source")) s.n_source = j.at("n_source").get<std::size_t>();
    if (j.contains("n_target")) s.n_target = j.at("n_target").get<std::size_t>();
    if (j.contains("n_oracle")) s.n_oracle = j.at("n_oracle").get<std::size_t>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
}

nlohmann::json to_json(const MixtureTaskSpec& s) {
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& c : s.per_class_counts) counts.push_back({c[0], c[1]});
    return {{"num_classes", s.num_classes},
            {"source_share", s.source_share},
            {"per_class_counts", counts},
            {"binary_relabel_threshold", s.binary_relabel_threshold}};
}

MixtureTaskSpec mixture_spec_from_json(const nlohmann::json& j) {
    MixtureTaskSpec s;
    s.num_classes = j.at("num_classes").get<std::size_t>();
    s.source_share = j.at("source_share").get<std::vector<double>>();
    for (const auto& c : j.at("per_class_counts")) s.per_class_counts.push_back({c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>()});
    s.binary_relabel_threshold = j.at("binary_relabel_threshold").get<int>();
    s.validate();
    return s;
}

// ---- builders -------------------------------------------------------------------

MixtureTaskSpec mixture_spec_for_pools(const LabeledSample& pool0, const LabeledSample& pool1,
                                       std::vector<double> source_share, int binary_relabel_threshold) {
    MixtureTaskSpec spec;
    spec.num_classes = source_share.size();
    spec.source_share = std::move(source_share);
    spec.binary_relabel_threshold = binary_relabel_threshold;
    spec.per_class_counts.assign(spec.num_classes, {0, 0});
    const LabeledSample* pools[2] = {&pool0, &pool1};
    for (std::size_t o = 0; o < 2; ++o) {
        for (Label y : pools[o]->labels) {
            if (y >= spec.num_classes) throw std::invalid_argument("mixture pool label outside the class range");
            ++spec.per_class_counts[y][o];
        }
    }
    spec.validate();
    return spec;
}

TaskInstance build_mixture_task(const LabeledSample& pool0, const LabeledSample& pool1, const MixtureTaskSpec& spec,
                                std::uint64_t seed) {
    const WeightTable table = mixture_weights(spec);
    if (pool0.dim() != pool1.dim()) throw std::invalid_argument("build_mixture_task: pools differ in dimension");
    const LabeledSample* pools[2] = {&pool0, &pool1};

    TaskInstance task;
    task.kind = TaskKind::mixture;
    task.mixture = spec;
    task.seed = seed;
    task.source.origin.emplace();
    task.source.weights.emplace();
    task.target_labeled_oracle.origin.emplace();

    auto push = [&](LabeledSample& dst, const LabeledSample& pool, std::size_t row, Label y, int origin) {
        dst.features.append_row(pool.features.row(row));
        dst.labels.push_back(y);
        dst.origin->push_back(origin);
    };

    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        const Label binary = static_cast<int>(c) < spec.binary_relabel_threshold ? 0 : 1;
        for (int o = 0; o < 2; ++o) {
            const LabeledSample& pool = *pools[o];
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (pool.labels[i] == c) rows.push_back(i);
            }
            const WeightCell& cell = table.cells[2 * c + static_cast<std::size_t>(o)];
            if (rows.size() != cell.source_count + cell.target_count) {
                throw std::invalid_argument("build_mixture_task: pool " + std::to_string(o) + " has " +
                                            std::to_string(rows.size()) + " rows of class " + std::to_string(c) +
                                            ", spec expects " + std::to_string(cell.source_count + cell.target_count));
            }
            Rng rng = make_rng(seed, "mixture-cell", 2 * c + static_cast<std::size_t>(o));
            const auto perm = random_permutation(rows.size(), rng);
            for (std::size_t k = 0; k < perm.size(); ++k) {
                const std::size_t row = rows[perm[k]];
                if (k < cell.source_count) {
                    push(task.source, pool, row, binary, o);
                    task.source.weights->push_back(cell.weight);
                } else {
                    push(task.target_labeled_oracle, pool, row, binary, o);
                }
            }
        }
    }
    task.target_x = UnlabeledSample::from(task.target_labeled_oracle);
    task.beta_inf = table.max_weight();
    return task;
}

TaskInstance build_one_sided_task(const LabeledSample& pool_source_only, const LabeledSample& pool_shared,
                                  double move_fraction, std::uint64_t seed) {
    if (!(move_fraction > 0.0 && move_fraction < 1.0)) {
        throw OverlapViolation("build_one_sided_task: move_fraction must lie strictly in (0,1)");
    }
    if (pool_source_only.size() > 0 && pool_source_only.dim() != pool_shared.dim()) {
        throw std::invalid_argument("build_one_sided_task: pools differ in dimension");
    }
    const std::size_t n = pool_shared.size();
    const auto moved = static_cast<std::size_t>(std::llround(move_fraction * static_cast<double>(n)));
    if (moved == 0 || moved >= n) {
        throw OverlapViolation("build_one_sided_task: move fraction leaves the source or the target without shared rows");
    }

    TaskInstance task;
    task.kind = TaskKind::one_sided;
    task.move_fraction = move_fraction;
    task.seed = seed;
    Rng rng = make_rng(seed, "one-sided");
    auto perm = random_permutation(n, rng);
    std::vector<std::size_t> to_source(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(moved));
    std::vector<std::size_t> to_target(perm.begin() + static_cast<std::ptrdiff_t>(moved), perm.end());
    std::sort(to_source.begin(), to_source.end());
    std::sort(to_target.begin(), to_target.end());

    LabeledSample only = pool_source_only;
    only.origin = std::vector<int>(only.size(), 0);
    only.weights.reset();
    LabeledSample moved_rows = pool_shared.select(to_source);
    moved_rows.origin = std::vector<int>(moved_rows.size(), 1);
    moved_rows.weights.reset();

    const std::size_t source_total = only.size() + moved_rows.size();
    const std::size_t target_total = to_target.size();
    // Effective fraction so the weight is exactly #S / moved, the true density ratio.
    const double w = one_sided_weight(static_cast<double>(moved) / static_cast<double>(n), source_total, target_total);
    only.weights = std::vector<double>(only.size(), 0.0);
    moved_rows.weights = std::vector<double>(moved_rows.size(), w);

    task.source = concat(only, moved_rows);
    task.target_labeled_oracle = pool_shared.select(to_target);
    task.target_labeled_oracle.origin = std::vector<int>(target_total, 1);
    task.target_labeled_oracle.weights.reset();
    task.target_x = UnlabeledSample::from(task.target_labeled_oracle);
    task.beta_inf = w;
    return task;
}

namespace {

LabeledSample draw_synthetic(const SyntheticSpec& spec, const std::vector<double>& mix, std::size_t n, Rng& rng) {
    std::discrete_distribution<std::size_t> pick(mix.begin(), mix.end());
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LabeledSample s;
    s.features = Matrix(n, spec.dim);
    s.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = spec.components[pick(rng)];
        auto row = s.features.row(i);
        for (std::size_t d = 0; d < spec.dim; ++d) row[d] = c.mean[d] + spec.component_std * z(rng);
        s.labels[i] = u(rng) < spec.positive_probability(row) ? 1 : 0;
    }
    return s;
}

}  // namespace

TaskInstance build_synthetic_task(const SyntheticSpec& spec) {
    spec.validate();
    const Normalized mix = normalized_weights(spec);
    TaskInstance task;
    task.kind = TaskKind::synthetic;
    task.synthetic = spec;
    task.seed = spec.seed;

    Rng src_rng = make_rng(spec.seed, "synthetic-source");
    task.source = draw_synthetic(spec, mix.source, spec.n_source, src_rng);
    std::vector<double> w(spec.n_source);
    for (std::size_t i = 0; i < spec.n_source; ++i) w[i] = spec.density_ratio(task.source.features.row(i));
    task.source.weights = std::move(w);

    Rng tgt_rng = make_rng(spec.seed, "synthetic-target");
    LabeledSample target = draw_synthetic(spec, mix.target, spec.n_target, tgt_rng);
    task.target_x = UnlabeledSample::from(target);
    if (spec.n_oracle > 0) {
        Rng orc_rng = make_rng(spec.seed, "synthetic-oracle");
        task.target_labeled_oracle = draw_synthetic(spec, mix.target, spec.n_oracle, orc_rng);
    } else {
        task.target_labeled_oracle = std::move(target);
    }
    task.beta_inf = spec.beta_infinity();
    return task;
}

// ---- dataset files ---------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    return s.substr(b);
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    const std::string t = trim(s);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) fail(path, line, "'" + t + "' is not a number");
    if (!std::isfinite(v)) fail(path, line, "non-finite value '" + t + "'");
    return v;
}

long parse_int(const std::string& s, const std::filesystem::path& path, std::size_t line, const char* what) {
    const std::string t = trim(s);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) fail(path, line, std::string(what) + " '" + t + "' is not an integer");
    return v;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

LabeledSample load_dataset(const std::filesystem::path& path, std::size_t num_classes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
    std::string line;
    if (!std::getline(in, line)) fail(path, 1, "missing header");
    auto header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    std::size_t d = 0;
    while (d < header.size() && header[d] == "f" + std::to_string(d)) ++d;
    if (d == 0) fail(path, 1, "header must start with f0");
    if (d >= header.size() || header[d] != "label") fail(path, 1, "expected 'label' after f" + std::to_string(d - 1));
    std::size_t col = d + 1;
    const bool has_origin = col < header.size() && header[col] == "origin";
    if (has_origin) ++col;
    const bool has_weight = col < header.size() && header[col] == "weight";
    if (has_weight) ++col;
    if (col != header.size()) fail(path, 1, "unexpected column '" + header[col] + "'");

    LabeledSample s;
    s.features = Matrix(0, d);
    if (has_origin) s.origin.emplace();
    if (has_weight) s.weights.emplace();
    std::vector<double> row(d);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            fail(path, lineno, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < d; ++j) row[j] = parse_double(cells[j], path, lineno);
        const long label = parse_int(cells[d], path, lineno, "label");
        if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
            fail(path, lineno, "label " + std::to_string(label) + " outside the declared " + std::to_string(num_classes) +
                                   " classes");
        }
        s.features.append_row(row);
        s.labels.push_back(static_cast<Label>(label));
        std::size_t next = d + 1;
        if (has_origin) {
            const long o = parse_int(cells[next++], path, lineno, "origin");
            if (o != 0 && o != 1) fail(path, lineno, "origin must be 0 or 1");
            s.origin->push_back(static_cast<int>(o));
        }
        if (has_weight) {
            const double w = parse_double(cells[next], path, lineno);
            if (w < 0.0) fail(path, lineno, "importance weight must be >= 0");
            s.weights->push_back(w);
        }
    }
    return s;
}

void save_dataset(const std::filesystem::path& path, const LabeledSample& s) {
    s.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset: " + path.string());
    for (std::size_t j = 0; j < s.dim(); ++j) out << 'f' << j << ',';
    out << "label";
    if (s.origin) out << ",origin";
    if (s.weights) out << ",weight";
    out << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (double v : s.features.row(i)) out << fmt(v) << ',';
        out << static_cast<int>(s.labels[i]);
        if (s.origin) out << ',' << (*s.origin)[i];
        if (s.weights) out << ',' << fmt((*s.weights)[i]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing dataset: " + path.string());
}

namespace {

std::string kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::synthetic: return "synthetic";
        case TaskKind::mixture: return "mixture";
        case TaskKind::one_sided: return "one_sided";
    }
    return "?";
}

TaskKind kind_from(const std::string& s) {
    if (s == "synthetic") return TaskKind::synthetic;
    if (s == "mixture") return TaskKind::mixture;
    if (s == "one_sided") return TaskKind::one_sided;
    throw std::invalid_argument("unknown task kind '" + s + "'");
}

}  // namespace

std::filesystem::path write_task(const std::filesystem::path& dir, const TaskInstance& task) {
    std::filesystem::create_directories(dir);
    save_dataset(dir / "source.csv", task.source);
    LabeledSample target;
    target.features = task.target_x.features;
    target.origin = task.target_x.origin;
    const bool oracle_is_target = task.target_labeled_oracle.features == task.target_x.features;

    nlohmann::json files = {{"source", "source.csv"}};
    if (oracle_is_target) {
        save_dataset(dir / "target.csv", task.target_labeled_oracle);
        files["target"] = "target.csv";
    } else {
        // Target labels unknown here: keep a labeled oracle file alongside.
        target.labels.assign(target.size(), 0);
        save_dataset(dir / "target.csv", target);
        save_dataset(dir / "target_oracle.csv", task.target_labeled_oracle);
        files["target"] = "target.csv";
        files["target_oracle"] = "target_oracle.csv";
    }

    nlohmann::json manifest = {{"kind", kind_name(task.kind)},
                               {"beta_inf", task.beta_inf},
                               {"seed", task.seed},
                               {"files", files},
                               {"target_labels", oracle_is_target ? "oracle" : "absent"}};
    if (task.synthetic) manifest["spec"] = to_json(*task.synthetic);
    if (task.mixture) {
        manifest["spec"] = to_json(*task.mixture);
        std::ofstream wt(dir / "weights.csv");
        write_weight_table_csv(wt, mixture_weights(*task.mixture));
        manifest["files"]["weights"] = "weights.csv";
    }
    if (task.move_fraction) manifest["move_fraction"] = *task.move_fraction;
    const auto path = dir / "manifest.json";
    std::ofstream(path) << manifest.dump(2) << '\n';
    return path;
}

TaskInstance load_task(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open task manifest: " + manifest_path.string());
    const nlohmann::json m = nlohmann::json::parse(in);
    const auto base = manifest_path.parent_path();
    const auto& files = m.at("files");

    TaskInstance task;
    task.kind = kind_from(m.at("kind").get<std::string>());
    task.beta_inf = m.at("beta_inf").get<double>();
    task.seed = m.value("seed", std::uint64_t{0});
    if (task.kind == TaskKind::synthetic) task.synthetic = synthetic_spec_from_json(m.at("spec"));
    if (task.kind == TaskKind::mixture) task.mixture = mixture_spec_from_json(m.at("spec"));
    if (m.contains("move_fraction")) task.move_fraction = m.at("move_fraction").get<double>();

    task.source = load_dataset(base / files.at("source").get<std::string>());
    if (!task.source.weights) throw std::runtime_error("task source file carries no importance weights");
    const LabeledSample target = load_dataset(base / files.at("target").get<std::string>());
    task.target_x = UnlabeledSample::from(target);
    task.target_labeled_oracle =
        files.contains("target_oracle") ? load_dataset(base / files.at("target_oracle").get<std::string>()) : target;
    return task;
}

}  // namespace pbda
