#include "bondlab/kernels.hpp"

#include <exception>
#include <mutex>

namespace bondlab::kernels {

namespace {

// Exceptions may not escape an OpenMP region; park the first one and rethrow after.
class ErrorSlot {
public:
    template <class F>
    void run(F&& f) {
        try {
            f();
        } catch (...) {
            std::lock_guard<std::mutex> lk(mu_);
            if (!err_) err_ = std::current_exception();
        }
    }
    void rethrow() {
        if (err_) std::rethrow_exception(err_);
    }

private:
    std::mutex mu_;
    std::exception_ptr err_;
};

Mat lag_product(const Mat& Xc, int j) {
    const Eigen::Index T = Xc.rows();
    if (j >= T) return Mat::Zero(Xc.cols(), Xc.cols());
    return Xc.bottomRows(T - j).transpose() * Xc.topRows(T - j) / double(T);
}

long long count_chunk(const Vec& w, double x, long long n, std::uint64_t seed, long long chunk) {
    auto rng = make_stream(seed, std::uint64_t(chunk));
    std::normal_distribution<double> nd;
    long long hits = 0;
    for (long long d = 0; d < n; ++d) {
        double s = 0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            double z = nd(rng);
            s += w(i) * z * z;
        }
        if (s >= x) ++hits;
    }
    return hits;
}

void roll_one(const Mat& Y, const Mat& F, int window, int min_obs, RollMode mode, Eigen::Index i,
              std::vector<Mat>& out) {
    const Eigen::Index T = Y.rows(), K = F.cols();
    std::vector<Eigen::Index> rows;
    for (Eigen::Index t = 0; t < T; ++t) {
        rows.clear();
        for (Eigen::Index s = std::max<Eigen::Index>(0, t - window); s < t; ++s)
            if (!std::isnan(Y(s, i))) rows.push_back(s);
        if (Eigen::Index(rows.size()) < min_obs) continue;
        const Eigen::Index n = Eigen::Index(rows.size());
        Mat Z(n, K);
        Vec y(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            Z.row(r) = F.row(rows[r]);
            y(r) = Y(rows[r], i);
        }
        if (mode == RollMode::covariances) {
            Vec zc_mean = Z.colwise().mean().transpose();
            double ym = y.mean();
            for (Eigen::Index k = 0; k < K; ++k)
                out[k](t, i) = ((Z.col(k).array() - zc_mean(k)) * (y.array() - ym)).sum() / double(n);
        } else {
            Mat X = with_intercept(Z);
            Eigen::ColPivHouseholderQR<Mat> qr(X);
            qr.setThreshold(1e-12);
            if (qr.rank() < X.cols()) continue;
            Vec b = qr.solve(y);
            for (Eigen::Index k = 0; k < K; ++k) out[k](t, i) = b(k + 1);
        }
    }
}

}  // namespace

std::vector<Mat> autocovariances(const Mat& Xc, int max_lag, Exec ex) {
    std::vector<Mat> out(std::size_t(max_lag) + 1);
    if (ex == Exec::serial) {
        for (int j = 0; j <= max_lag; ++j) out[j] = lag_product(Xc, j);
        return out;
    }
#pragma omp parallel for schedule(static)
    for (int j = 0; j <= max_lag; ++j) out[j] = lag_product(Xc, j);
    return out;
}

double weighted_chi2_sf(const Vec& w, double x, long long draws, std::uint64_t seed, Exec ex) {
    if (draws <= 0) throw ConfigError("weighted chi-square needs a positive number of draws");
    const long long nchunks = (draws + kChunk - 1) / kChunk;
    auto size_of = [&](long long c) { return std::min(kChunk, draws - c * kChunk); };
    long long hits = 0;
    if (ex == Exec::serial) {
        for (long long c = 0; c < nchunks; ++c) hits += count_chunk(w, x, size_of(c), seed, c);
    } else {
#pragma omp parallel for schedule(static) reduction(+ : hits)
        for (long long c = 0; c < nchunks; ++c) hits += count_chunk(w, x, size_of(c), seed, c);
    }
    return double(hits) / double(draws);
}

Mat replicate(int B, int dim, std::uint64_t seed, const std::function<Vec(int, std::mt19937_64&)>& fn, Exec ex) {
    Mat out(B, dim);
    auto body = [&](int b) {
        auto rng = make_stream(seed, std::uint64_t(b));
        Vec v = fn(b, rng);
        if (v.size() != dim) throw NumericalError("replication returned a vector of the wrong length");
        out.row(b) = v.transpose();
    };
    if (ex == Exec::serial) {
        for (int b = 0; b < B; ++b) body(b);
        return out;
    }
    ErrorSlot slot;
#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) slot.run([&] { body(b); });
    slot.rethrow();
    return out;
}

void for_each_index(long n, const std::function<void(long)>& fn, Exec ex) {
    if (ex == Exec::serial) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    ErrorSlot slot;
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) slot.run([&] { fn(i); });
    slot.rethrow();
}

std::vector<Mat> rolling_stats(const Mat& Y, const Mat& F, int window, int min_obs, RollMode mode, Exec ex) {
    if (F.rows() != Y.rows()) throw DataError("rolling_stats: factor and return lengths differ");
    std::vector<Mat> out(std::size_t(F.cols()), Mat::Constant(Y.rows(), Y.cols(), kNaN));
    const Eigen::Index N = Y.cols();
    if (ex == Exec::serial) {
        for (Eigen::Index i = 0; i < N; ++i) roll_one(Y, F, window, min_obs, mode, i, out);
        return out;
    }
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < N; ++i) roll_one(Y, F, window, min_obs, mode, i, out);
    return out;
}

}  // namespace bondlab::kernels
