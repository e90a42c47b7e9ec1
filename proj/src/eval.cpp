#include "lotus/eval.hpp"

#include "lotus/csv.hpp"
#include "lotus/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lotus {

double roc_auc(const Vector& scores, const std::vector<int>& labels) {
    const int n = static_cast<int>(scores.size());
    if (n != static_cast<int>(labels.size()))
        throw std::invalid_argument("roc_auc: scores and labels differ in length");
    long long n_pos = 0;
    for (const int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("roc_auc: labels must be 0 or 1");
        n_pos += y;
    }
    const long long n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_auc: labels must contain both classes");
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(scores(i))) throw std::invalid_argument("roc_auc: non-finite score");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&scores](int i, int j) { return scores(i) < scores(j); });

    // midranks are half-integers, so the rank sum is exact in doubles
    double rank_sum_pos = 0.0;
    int i = 0;
    while (i < n) {
        int j = i;
        while (j < n && scores(order[j]) == scores(order[i])) ++j;
        const double midrank = 0.5 * ((i + 1) + j);
        for (int t = i; t < j; ++t)
            if (labels[order[t]] == 1) rank_sum_pos += midrank;
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

int ScoreTable::method_index(const std::string& name) const {
    for (int c = 0; c < static_cast<int>(methods.size()); ++c)
        if (methods[c] == name) return c;
    throw std::invalid_argument("no such method column: " + name);
}

std::string ScoreTable::to_csv() const {
    std::string out = "dataset";
    for (const std::string& m : methods) out += "," + m;
    out += "\n";
    char buf[32];
    for (std::size_t r = 0; r < datasets.size(); ++r) {
        out += datasets[r];
        for (std::size_t c = 0; c < methods.size(); ++c) {
            out += ',';
            if (cells[r][c]) {
                std::snprintf(buf, sizeof(buf), "%.6f", *cells[r][c]);
                out += buf;
            }
        }
        out += '\n';
    }
    return out;
}

ScoreTable ScoreTable::from_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    ScoreTable table;
    bool header = true;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (header) {
            if (cells.empty() || cells[0] != "dataset")
                throw std::runtime_error("score table must start with a 'dataset' column");
            table.methods.assign(cells.begin() + 1, cells.end());
            header = false;
            continue;
        }
        if (cells.size() != table.methods.size() + 1)
            throw std::runtime_error("score table row has wrong cell count: " + line);
        table.datasets.push_back(cells[0]);
        std::vector<std::optional<double>> row_vals;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c].empty())
                row_vals.emplace_back(std::nullopt);
            else
                row_vals.emplace_back(std::stod(cells[c]));
        }
        table.cells.push_back(std::move(row_vals));
    }
    if (header) throw std::runtime_error("empty score table");
    return table;
}

std::map<std::string, double> average_rank(const ScoreTable& table) {
    const int rows = static_cast<int>(table.datasets.size());
    const int cols = static_cast<int>(table.methods.size());
    if (rows == 0 || cols == 0) throw std::invalid_argument("average_rank: empty table");
    std::vector<double> sum(cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c)
            if (!table.cells[r][c])
                throw std::invalid_argument("average_rank: missing cell at " + table.datasets[r] +
                                            "/" + table.methods[c]);
        std::vector<int> order(cols);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            return *table.cells[r][x] > *table.cells[r][y];
        });
        int i = 0;
        while (i < cols) {
            int j = i;
            while (j < cols && *table.cells[r][order[j]] == *table.cells[r][order[i]]) ++j;
            const double midrank = 0.5 * ((i + 1) + j);
            for (int t = i; t < j; ++t) sum[order[t]] += midrank;
            i = j;
        }
    }
    std::map<std::string, double> out;
    for (int c = 0; c < cols; ++c) out[table.methods[c]] = sum[c] / rows;
    return out;
}

RopeResult rope_test(const std::vector<double>& a, const std::vector<double>& b, double rope,
                     int n_samples, std::uint64_t seed) {
    if (a.size() != b.size()) throw std::invalid_argument("rope_test: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("rope_test: need at least 2 pairs");
    if (rope <= 0.0) throw std::invalid_argument("rope_test: rope must be positive");
    if (n_samples < 1) throw std::invalid_argument("rope_test: n_samples must be positive");

    // one zero pseudo-observation acts as the prior
    const int m = static_cast<int>(a.size()) + 1;
    std::vector<double> z(m, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) z[i + 1] = a[i] - b[i];

    long long n_left = 0, n_rope = 0, n_right = 0;
#pragma omp parallel for schedule(static) reduction(+ : n_left, n_rope, n_right)
    for (int s = 0; s < n_samples; ++s) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(s)));
        std::vector<double> w(m);
        for (int i = 0; i < m; ++i) w[i] = rng.exponential();
        // unnormalized Dirichlet weights; only mass comparisons matter
        double mass_left = 0.0, mass_rope = 0.0, mass_right = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double mid = 0.5 * (z[i] + z[j]);
                const double ww = w[i] * w[j];
                if (mid > rope)
                    mass_left += ww;
                else if (mid < -rope)
                    mass_right += ww;
                else
                    mass_rope += ww;
            }
        // a strict winner is required on each side; a left-right tie is
        // symmetric and lands in the rope
        if (mass_left > mass_rope && mass_left > mass_right)
            ++n_left;
        else if (mass_right > mass_rope && mass_right > mass_left)
            ++n_right;
        else
            ++n_rope;
    }
    RopeResult out;
    out.p_left = static_cast<double>(n_left) / n_samples;
    out.p_rope = static_cast<double>(n_rope) / n_samples;
    out.p_right = static_cast<double>(n_right) / n_samples;
    return out;
}

std::string to_string(SynthFamily family) {
    switch (family) {
        case SynthFamily::gauss_blob: return "gauss_blob";
        case SynthFamily::two_clusters: return "two_clusters";
        case SynthFamily::correlated_gauss: return "correlated_gauss";
        case SynthFamily::ring: return "ring";
        case SynthFamily::subspace_outliers: return "subspace_outliers";
        case SynthFamily::scaled_blob: return "scaled_blob";
    }
    throw std::invalid_argument("bad synth family value");
}

SynthFamily synth_family_from_string(const std::string& name) {
    for (const SynthFamily f : all_synth_families())
        if (to_string(f) == name) return f;
    throw std::invalid_argument("unknown synthetic family: " + name);
}

const std::vector<SynthFamily>& all_synth_families() {
    static const std::vector<SynthFamily> kAll = {
        SynthFamily::gauss_blob,        SynthFamily::two_clusters, SynthFamily::correlated_gauss,
        SynthFamily::ring,              SynthFamily::subspace_outliers,
        SynthFamily::scaled_blob};
    return kAll;
}

Dataset generate_synthetic(SynthFamily family, int n, int d, double contamination,
                           std::uint64_t seed) {
    if (n < 2 || d < 1) throw std::invalid_argument("generate_synthetic: need n >= 2, d >= 1");
    if (!(contamination > 0.0 && contamination < 0.5))
        throw std::invalid_argument("generate_synthetic: contamination must lie in (0, 0.5)");
    const int n_out = static_cast<int>(std::lround(contamination * n));
    const int n_in = n - n_out;
    if (n_out < 1 || n_in < 1)
        throw std::invalid_argument("generate_synthetic: contamination yields an empty class");

    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(family)));
    Dataset ds;
    ds.features.resize(n, d);
    ds.name = to_string(family);

    // The comparison transform standardizes columns and whitens, which erases
    // global scale, per-axis scale, and linear correlation. Each family must
    // therefore differ in shape that survives whitening, not just in moments.
    const auto laplace_unit = [&rng] {
        const double u = rng.uniform() - 0.5;
        return -std::copysign(std::log(1.0 - 2.0 * std::abs(u)), u) / std::numbers::sqrt2;
    };
    for (int i = 0; i < n_in; ++i) {
        switch (family) {
            case SynthFamily::gauss_blob:
                for (int f = 0; f < d; ++f) ds.features(i, f) = rng.normal();
                break;
            case SynthFamily::two_clusters: {
                const double center = (i % 2 == 0) ? 2.5 : -2.5;
                for (int f = 0; f < d; ++f) ds.features(i, f) = center + rng.normal();
                break;
            }
            case SynthFamily::correlated_gauss: {
                // heavy-tailed shared factor: the correlation pattern survives
                // whitening as one leptokurtic direction among Gaussian ones
                const double shared = laplace_unit();
                for (int f = 0; f < d; ++f)
                    ds.features(i, f) = 0.9 * shared + std::sqrt(1.0 - 0.81) * rng.normal();
                break;
            }
            case SynthFamily::ring: {
                const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
                const double radius = 3.0 + 0.2 * rng.normal();
                ds.features(i, 0) = radius * std::cos(theta);
                if (d > 1) ds.features(i, 1) = radius * std::sin(theta);
                for (int f = 2; f < d; ++f) ds.features(i, f) = 0.3 * rng.normal();
                break;
            }
            case SynthFamily::subspace_outliers: {
                // inliers fill a flat uniform plate inside a subspace; the
                // platykurtic live directions stay distinguishable after whitening
                const int live = (d + 1) / 2;
                constexpr double kUnitUniformHalf = 1.7320508075688772;
                for (int f = 0; f < d; ++f)
                    ds.features(i, f) = f < live
                                            ? rng.uniform(-kUnitUniformHalf, kUnitUniformHalf)
                                            : 0.05 * rng.normal();
                break;
            }
            case SynthFamily::scaled_blob: {
                // mixture of the same blob at two scales: a sharp core inside a
                // diffuse shell, so the scale structure survives standardization
                const double scale = rng.uniform() < 0.5 ? 0.6 : 2.4;
                for (int f = 0; f < d; ++f) ds.features(i, f) = scale * rng.normal();
                break;
            }
        }
    }

    // outliers cover a box three times the inlier extent per dimension
    for (int f = 0; f < d; ++f) {
        double lo = ds.features(0, f), hi = ds.features(0, f);
        for (int i = 1; i < n_in; ++i) {
            lo = std::min(lo, ds.features(i, f));
            hi = std::max(hi, ds.features(i, f));
        }
        const double mid = 0.5 * (lo + hi);
        const double half = std::max(1.5 * (hi - lo), 1e-6);
        for (int i = n_in; i < n; ++i) ds.features(i, f) = rng.uniform(mid - half, mid + half);
    }

    std::vector<int> labels(n, 0);
    for (int i = n_in; i < n; ++i) labels[i] = 1;
    ds.labels = std::move(labels);
    return ds;
}

ScoreTable loo_evaluate(const MetaStore& store, const TransformConfig& tcfg,
                        const SolverConfig& scfg, const std::vector<PipelineConfig>& baselines,
                        std::vector<SelectionReport>* reports) {
    if (store.entries.size() < 2)
        throw std::invalid_argument("loo_evaluate: store needs at least 2 entries");

    ScoreTable table;
    table.methods.push_back("LOTUS");
    for (std::size_t b = 0; b < baselines.size(); ++b) {
        validate_config(baselines[b]);
        std::string name = to_string(baselines[b].detector);
        while (std::find(table.methods.begin(), table.methods.end(), name) !=
               table.methods.end())
            name += "'";
        table.methods.push_back(name);
    }
    if (reports) reports->clear();

    for (const MetaEntry& entry : store.entries) {
        const Dataset ds = read_dataset_csv(
            (std::filesystem::path(store.dir) / entry.dataset_path).string());
        if (!ds.labels)
            throw std::invalid_argument("loo_evaluate: dataset " + entry.id + " has no labels");
        table.datasets.push_back(entry.id);
        std::vector<std::optional<double>> row;

        try {
            const SelectionReport rep = lotus_select(ds, store, tcfg, scfg, {entry.id});
            if (reports) reports->push_back(rep);
            row.emplace_back(roc_auc(fit_score(rep.pipeline, ds.features), *ds.labels));
        } catch (const std::exception&) {
            row.emplace_back(std::nullopt);
        }
        for (const PipelineConfig& baseline : baselines) {
            try {
                row.emplace_back(roc_auc(fit_score(baseline, ds.features), *ds.labels));
            } catch (const std::exception&) {
                row.emplace_back(std::nullopt);
            }
        }
        table.cells.push_back(std::move(row));
    }
    return table;
}

}  // namespace lotus
