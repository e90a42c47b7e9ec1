#include "lotus/detail/detector_kernels.hpp"

#include "lotus/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lotus::detail {

namespace {

constexpr double kDensityFloor = 1e-12;

// k smallest (squared distance, index) pairs to point i, self excluded,
// ties broken by index so the neighbor set is unambiguous.
std::vector<std::pair<double, int>> k_nearest(const RowMatrix& x, int i, int k) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        double s = 0.0;
        for (int f = 0; f < d; ++f) {
            const double diff = x(i, f) - x(j, f);
            s += diff * diff;
        }
        cand.emplace_back(s, j);
    }
    std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
    cand.resize(k);
    std::sort(cand.begin(), cand.end());
    return cand;
}

struct IsoNode {
    int feature = -1;  // negative marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int size = 0;
};

int build_iso_node(const RowMatrix& x, std::vector<int>& work, int lo, int hi, int depth,
                   int height_limit, Rng& rng, std::vector<IsoNode>& nodes) {
    const int count = hi - lo;
    const int self = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (count <= 1 || depth >= height_limit) {
        nodes[self].size = count;
        return self;
    }
    const int d = static_cast<int>(x.cols());
    // only features that actually vary inside this node are split candidates
    std::vector<int> usable;
    std::vector<double> fmin(d), fmax(d);
    for (int f = 0; f < d; ++f) {
        double mn = x(work[lo], f), mx = mn;
        for (int p = lo + 1; p < hi; ++p) {
            mn = std::min(mn, x(work[p], f));
            mx = std::max(mx, x(work[p], f));
        }
        fmin[f] = mn;
        fmax[f] = mx;
        if (mx > mn) usable.push_back(f);
    }
    if (usable.empty()) {
        nodes[self].size = count;
        return self;
    }
    const int f = usable[rng.uniform_int(static_cast<int>(usable.size()))];
    const double thr = rng.uniform(fmin[f], fmax[f]);
    auto mid_it = std::partition(work.begin() + lo, work.begin() + hi,
                                 [&](int idx) { return x(idx, f) < thr; });
    const int mid = static_cast<int>(mid_it - work.begin());
    nodes[self].feature = f;
    nodes[self].threshold = thr;
    nodes[self].left = build_iso_node(x, work, lo, mid, depth + 1, height_limit, rng, nodes);
    nodes[self].right = build_iso_node(x, work, mid, hi, depth + 1, height_limit, rng, nodes);
    return self;
}

// Equal-width histogram over [lo, hi]; returns per-bin density count/(n*width).
std::vector<double> bin_densities(const std::vector<double>& vals, double lo, double hi,
                                  int n_bins) {
    const double width = (hi - lo) / n_bins;
    std::vector<int> counts(n_bins, 0);
    for (const double v : vals) {
        int b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, n_bins - 1);
        ++counts[b];
    }
    std::vector<double> dens(n_bins);
    const double denom = static_cast<double>(vals.size()) * width;
    for (int b = 0; b < n_bins; ++b) dens[b] = counts[b] / denom;
    return dens;
}

int bin_of(double v, double lo, double hi, int n_bins) {
    const double width = (hi - lo) / n_bins;
    return std::clamp(static_cast<int>((v - lo) / width), 0, n_bins - 1);
}

}  // namespace

KnnMethod parse_knn_method(const std::string& method) {
    if (method == "largest") return KnnMethod::largest;
    if (method == "mean") return KnnMethod::mean;
    if (method == "median") return KnnMethod::median;
    throw std::invalid_argument("knn: unknown method '" + method + "'");
}

void check_knn_args(const RowMatrix& x, int k) {
    if (x.rows() < 2) throw std::invalid_argument("knn: needs at least 2 points");
    if (k < 1 || k >= x.rows())
        throw std::invalid_argument("knn: k must lie in [1, n-1]");
}

void check_hist_args(const RowMatrix& x, int n_bins) {
    if (x.rows() < 1) throw std::invalid_argument("hbos: needs at least 1 point");
    if (n_bins < 1) throw std::invalid_argument("hbos: n_bins must be positive");
}

void check_iforest_args(const RowMatrix& x, int n_estimators, int max_samples) {
    if (x.rows() < 2) throw std::invalid_argument("iforest: needs at least 2 points");
    if (n_estimators < 1) throw std::invalid_argument("iforest: n_estimators must be positive");
    if (max_samples < 2) throw std::invalid_argument("iforest: max_samples must be at least 2");
}

void check_loda_args(const RowMatrix& x, int n_projections, int n_bins) {
    if (x.rows() < 1) throw std::invalid_argument("loda: needs at least 1 point");
    if (n_projections < 1) throw std::invalid_argument("loda: n_projections must be positive");
    if (n_bins < 1) throw std::invalid_argument("loda: n_bins must be positive");
}

double knn_point_score(const RowMatrix& x, int i, int k, KnnMethod method) {
    const auto nb = k_nearest(x, i, k);
    switch (method) {
        case KnnMethod::largest:
            return std::sqrt(nb.back().first);
        case KnnMethod::mean: {
            double s = 0.0;
            for (const auto& [d2, j] : nb) s += std::sqrt(d2);
            return s / k;
        }
        case KnnMethod::median: {
            std::vector<double> dist(k);
            for (int t = 0; t < k; ++t) dist[t] = std::sqrt(nb[t].first);
            if (k % 2 == 1) return dist[k / 2];
            return 0.5 * (dist[k / 2 - 1] + dist[k / 2]);
        }
    }
    return 0.0;
}

double abod_point_score(const RowMatrix& x, int i, int k) {
    const int d = static_cast<int>(x.cols());
    auto nb = k_nearest(x, i, k);
    std::sort(nb.begin(), nb.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    // variance of the norm-weighted angle statistic over neighbor pairs
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(k) * (k - 1) / 2);
    for (int p = 0; p < k; ++p) {
        for (int q = p + 1; q < k; ++q) {
            double nu = 0.0, nv = 0.0, dot = 0.0;
            const int jp = nb[p].second;
            const int jq = nb[q].second;
            for (int f = 0; f < d; ++f) {
                const double uf = x(jp, f) - x(i, f);
                const double vf = x(jq, f) - x(i, f);
                nu += uf * uf;
                nv += vf * vf;
                dot += uf * vf;
            }
            if (nu <= 0.0 || nv <= 0.0) continue;  // duplicate points carry no angle
            vals.push_back(dot / (nu * nv));
        }
    }
    if (vals.empty()) return 0.0;
    double mean = 0.0;
    for (const double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (const double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(vals.size());
    return -var;
}

void hbos_feature_contrib(const RowMatrix& x, int f, int n_bins, Matrix& contrib) {
    const int n = static_cast<int>(x.rows());
    double lo = x(0, f), hi = x(0, f);
    for (int i = 1; i < n; ++i) {
        lo = std::min(lo, x(i, f));
        hi = std::max(hi, x(i, f));
    }
    if (!(hi > lo)) {
        // constant feature: no information, contributes nothing
        for (int i = 0; i < n; ++i) contrib(i, f) = 0.0;
        return;
    }
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = x(i, f);
    const auto dens = bin_densities(vals, lo, hi, n_bins);
    for (int i = 0; i < n; ++i) {
        const int b = bin_of(x(i, f), lo, hi, n_bins);
        contrib(i, f) = -std::log(std::max(dens[b], kDensityFloor));
    }
}

double average_path_length(int n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    const double h = std::log(n - 1.0) + 0.5772156649015329;
    return 2.0 * h - 2.0 * (n - 1.0) / n;
}

void iforest_tree_depths(const RowMatrix& x, int t, int sample_size, std::uint64_t seed,
                         Matrix& depths) {
    const int n = static_cast<int>(x.rows());
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> work = rng.sample_without_replacement(n, sample_size);
    const int height_limit =
        static_cast<int>(std::ceil(std::log2(static_cast<double>(sample_size))));
    std::vector<IsoNode> nodes;
    nodes.reserve(2 * sample_size);
    build_iso_node(x, work, 0, sample_size, 0, height_limit, rng, nodes);
    for (int i = 0; i < n; ++i) {
        int cur = 0;
        int depth = 0;
        while (nodes[cur].feature >= 0) {
            cur = x(i, nodes[cur].feature) < nodes[cur].threshold ? nodes[cur].left
                                                                  : nodes[cur].right;
            ++depth;
        }
        depths(i, t) = depth + average_path_length(nodes[cur].size);
    }
}

void loda_projection_contrib(const RowMatrix& x, int p, int n_bins, std::uint64_t seed,
                             Matrix& contrib) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(p)));
    const int nnz = std::min(d, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)))));
    const std::vector<int> idx = rng.sample_without_replacement(d, nnz);
    std::vector<double> w(nnz);
    for (int t = 0; t < nnz; ++t) w[t] = rng.normal();
    std::vector<double> z(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int t = 0; t < nnz; ++t) s += w[t] * x(i, idx[t]);
        z[i] = s;
    }
    double lo = z[0], hi = z[0];
    for (int i = 1; i < n; ++i) {
        lo = std::min(lo, z[i]);
        hi = std::max(hi, z[i]);
    }
    if (!(hi > lo)) {
        for (int i = 0; i < n; ++i) contrib(i, p) = 0.0;
        return;
    }
    const auto dens = bin_densities(z, lo, hi, n_bins);
    for (int i = 0; i < n; ++i) {
        const int b = bin_of(z[i], lo, hi, n_bins);
        contrib(i, p) = -std::log(std::max(dens[b], kDensityFloor));
    }
}

}  // namespace lotus::detail
