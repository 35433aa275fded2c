#include "tailica/ica.hpp"

#include "tailica/error.hpp"
#include "tailica/io.hpp"
#include "tailica/moments.hpp"
#include "tailica/tailcov.hpp"
#include "tailica/whiten.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace tailica {

namespace {

constexpr double kWhitenessTol = 1e-6;
constexpr double kSingularRatio = 1e-12;
constexpr double kJacobiTol = 1e-15;
constexpr int kMaxJacobiSweeps = 60;

double orthonormality_error(const Eigen::MatrixXd& W) {
    return (W.transpose() * W - Eigen::MatrixXd::Identity(W.cols(), W.cols())).cwiseAbs().maxCoeff();
}

void require_white(const SamplePanel& panel) {
    const Eigen::MatrixXd& y = panel.data();
    const Eigen::VectorXd mean = y.colwise().mean().transpose();
    const Eigen::MatrixXd cov = second_moment_matrix(y);
    const double dev = (cov - Eigen::MatrixXd::Identity(y.cols(), y.cols())).cwiseAbs().maxCoeff();
    if (dev > kWhitenessTol || mean.cwiseAbs().maxCoeff() > kWhitenessTol)
        throw DataError("ICA input is not white (max covariance deviation " + io::format_double(dev) + ")");
}

// One fixed-point sweep, returned up to a positive factor common to all
// columns. Writing u = s / sigma with sigma a power of two bounding |s|,
//   E[y g(s)] - E[g'(s)] w = sigma^{2k-2} (sigma E[y u^{2k-1}] - (2k-1) E[u^{2k-2}] w),
// and the common factor drops out of the symmetric orthogonalization.
struct Sweep {
    Eigen::MatrixXd update;
    double magnitude = 0.0;  // size of the two terms before cancellation
};

Sweep fixed_point_sweep(const Eigen::MatrixXd& y, const Eigen::MatrixXd& W, int k) {
    const double m = static_cast<double>(y.rows());
    const Eigen::MatrixXd s = y * W;
    const double sigma = binary_scale(s.cwiseAbs().maxCoeff());
    if (sigma == 0.0) throw NumericalError("all components vanish");
    const Eigen::ArrayXXd u = s.array() / sigma;
    const Eigen::MatrixXd g = u.pow(2 * k - 1).matrix();
    const Eigen::MatrixXd first = (sigma / m) * (y.transpose() * g);
    const Eigen::ArrayXXd gp = k == 1 ? Eigen::ArrayXXd::Ones(u.rows(), u.cols()) : Eigen::ArrayXXd(u.pow(2 * k - 2));
    const Eigen::VectorXd gp_mean = (2.0 * k - 1.0) * gp.colwise().mean().transpose();
    const Eigen::MatrixXd second = W * gp_mean.asDiagonal();
    return {first - second, first.norm() + second.norm()};
}

}  // namespace

ContrastSpec::ContrastSpec(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("contrast order k must be >= 1, got " + std::to_string(k));
}

double ContrastSpec::G(double u) const { return std::pow(u, 2 * k_) / (2.0 * k_); }
double ContrastSpec::g(double u) const { return std::pow(u, 2 * k_ - 1); }
double ContrastSpec::g_prime(double u) const {
    return k_ == 1 ? 1.0 : (2.0 * k_ - 1.0) * std::pow(u, 2 * k_ - 2);
}

Eigen::MatrixXd random_orthogonal(Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd draw(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) draw(i, j) = normal(rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(draw);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    // Fix the QR sign freedom so the draw is uniform (Haar) over orthogonal matrices.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

Eigen::MatrixXd symmetric_orthogonalize(const Eigen::MatrixXd& W) {
    if (W.rows() != W.cols()) throw std::invalid_argument("symmetric orthogonalization needs a square matrix");
    if (!W.allFinite()) throw NumericalError("non-finite entries in symmetric orthogonalization");
    const Eigen::Index d = W.cols();
    // Singularity is judged on column directions. Column norms of the fixed-point
    // update legitimately span many orders of magnitude for large k.
    Eigen::MatrixXd directions = W;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double norm = W.col(j).stableNorm();
        if (norm == 0.0) throw NumericalError("zero column in symmetric orthogonalization");
        directions.col(j) /= norm;
    }
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(directions).singularValues();
    if (!(sv.minCoeff() > kSingularRatio * sv.maxCoeff()))
        throw NumericalError("near-singular W W^T in symmetric orthogonalization");

    // (W W^T)^{-1/2} W equals the polar factor U V^T of W = U S V^T. One-sided
    // (Hestenes) Jacobi keeps U and V accurate for column-graded W, where
    // forming W W^T or a two-sided SVD would not.
    Eigen::MatrixXd U = W / binary_scale(W.cwiseAbs().maxCoeff());
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(d, d);
    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < d; ++p) {
            for (Eigen::Index q = p + 1; q < d; ++q) {
                const double np = U.col(p).stableNorm();
                const double nq = U.col(q).stableNorm();
                if (np == 0.0 || nq == 0.0) throw NumericalError("rank loss in symmetric orthogonalization");
                const double rho = (U.col(p) / np).dot(U.col(q) / nq);
                if (std::abs(rho) <= kJacobiTol) continue;
                rotated = true;
                const double ratio = nq / np;
                const double zeta = (ratio - 1.0 / ratio) / (2.0 * rho);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                for (auto* M : {&U, &V}) {
                    const Eigen::VectorXd cp = M->col(p);
                    M->col(p) = c * cp - s * M->col(q);
                    M->col(q) = s * cp + c * M->col(q);
                }
            }
        }
        if (!rotated) break;
    }
    for (Eigen::Index j = 0; j < d; ++j) U.col(j) /= U.col(j).stableNorm();
    Eigen::MatrixXd out = U * V.transpose();
    // One Newton-Schulz step polishes the remaining rounding.
    out = out * (1.5 * Eigen::MatrixXd::Identity(d, d) - 0.5 * out.transpose() * out);
    return out;
}

Eigen::MatrixXd canonical_signs(Eigen::MatrixXd W) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        Eigen::Index pivot = 0;
        W.col(j).cwiseAbs().maxCoeff(&pivot);
        if (W(pivot, j) < 0.0) W.col(j) = -W.col(j);
    }
    return W;
}

UnmixingMatrix fit_ica(const SamplePanel& white_panel, const ContrastSpec& contrast, std::uint64_t seed,
                       const IcaOptions& options) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("ICA tolerance must be positive");
    if (options.max_iter < 1) throw std::invalid_argument("ICA max_iter must be >= 1");
    require_white(white_panel);
    const Eigen::MatrixXd& y = white_panel.data();
    const Eigen::Index d = y.cols();

    UnmixingMatrix out;
    out.k = contrast.k();
    out.seed = seed;
    Eigen::MatrixXd W;
    if (options.initial) {
        if (options.initial->rows() != d || options.initial->cols() != d)
            throw std::invalid_argument("initial unmixing matrix has the wrong shape");
        W = symmetric_orthogonalize(*options.initial);
    } else {
        W = random_orthogonal(d, seed);
    }
    out.worst_orthonormality = orthonormality_error(W);

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        out.iterations = iter;
        const Sweep sweep = fixed_point_sweep(y, W, contrast.k());
        // The update cancels to rounding noise when every direction is already
        // stationary (k = 1 on white data); W is then a fixed point as it stands.
        if (sweep.update.norm() <= kWhitenessTol * sweep.magnitude) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd next = symmetric_orthogonalize(sweep.update);
        out.worst_orthonormality = std::max(out.worst_orthonormality, orthonormality_error(next));
        const double min_overlap = (next.transpose() * W).diagonal().cwiseAbs().minCoeff();
        W = next;
        if (1.0 - min_overlap < options.tol) {
            out.converged = true;
            break;
        }
    }
    out.W = canonical_signs(std::move(W));
    return out;
}

SamplePanel transform(const UnmixingMatrix& W, const SamplePanel& white_panel) {
    if (W.W.rows() != white_panel.cols())
        throw DataError("unmixing matrix expects " + std::to_string(W.W.rows()) + " columns, panel has " +
                        std::to_string(white_panel.cols()));
    return white_panel.with_data(white_panel.data() * W.W, numbered_ids("ic", W.W.cols()));
}

KktResidual kkt_residual(const SamplePanel& white_panel, const Eigen::MatrixXd& W, int k) {
    if (W.rows() != white_panel.cols() || W.rows() != W.cols())
        throw DataError("unmixing matrix shape does not match the panel");
    const UnmixingMatrix wrapped{W, k, 0, 0, false, 0.0};
    const auto T = tail_covariance(transform(wrapped, white_panel), k).values;
    KktResidual out;
    out.off_diagonal_max = off_diagonal_summary(T).max_abs;
    out.asymmetry_max = off_diagonal_summary(T - T.transpose()).max_abs;
    out.orthonormality_max = orthonormality_error(W);
    out.diagonal_max = T.diagonal().maxCoeff();
    const double order = 2.0 * k;
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
        for (Eigen::Index j = 0; j < T.cols(); ++j) {
            if (i == j) continue;
            // In log space: T_jj^{(2k-1)/2k} overflows long before T_ij does.
            const double log_bound = std::log(T(i, i)) / order + std::log(T(j, j)) * (order - 1.0) / order;
            if (!std::isfinite(log_bound)) continue;
            out.tail_correlation_max = std::max(out.tail_correlation_max, std::exp(std::log(std::abs(T(i, j))) - log_bound));
        }
    }
    return out;
}

double amari_index(const Eigen::MatrixXd& W_est, const Eigen::MatrixXd& A_true) {
    if (W_est.rows() != A_true.rows()) throw std::invalid_argument("amari index: incompatible shapes");
    const Eigen::MatrixXd P = (W_est.transpose() * A_true).cwiseAbs();
    const Eigen::Index d = P.rows();
    if (P.cols() != d) throw std::invalid_argument("amari index: W_est^T A_true must be square");
    if (Eigen::FullPivLU<Eigen::MatrixXd>(W_est.transpose() * A_true).rank() < d)
        throw NumericalError("amari index of a singular matrix");
    if (d == 1) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) total += P.row(i).sum() / P.row(i).maxCoeff() - 1.0;
    for (Eigen::Index j = 0; j < d; ++j) total += P.col(j).sum() / P.col(j).maxCoeff() - 1.0;
    return total / (2.0 * static_cast<double>(d) * static_cast<double>(d - 1));
}

void write_unmixing(const UnmixingMatrix& W, std::ostream& out) {
    out << "tailica-W v1, k=" << W.k << ", seed=" << W.seed << ", converged=" << (W.converged ? "true" : "false")
        << ", iterations=" << W.iterations << '\n';
    const auto rows = numbered_ids("pc", W.W.rows());
    out << "row";
    for (const auto& id : numbered_ids("ic", W.W.cols())) out << ',' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < W.W.rows(); ++i) {
        out << rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < W.W.cols(); ++j) out << ',' << io::format_double(W.W(i, j));
        out << '\n';
    }
}

void write_unmixing(const UnmixingMatrix& W, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_unmixing(W, out);
}

UnmixingMatrix read_unmixing(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("tailica-W v1", 0) != 0) throw DataError("missing 'tailica-W v1' header");
    UnmixingMatrix out;
    for (const auto& field : io::split_csv_line(line)) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "k") out.k = std::stoi(value);
        else if (key == "seed") out.seed = std::stoull(value);
        else if (key == "converged") out.converged = value == "true";
        else if (key == "iterations") out.iterations = std::stoi(value);
    }
    if (!std::getline(in, line)) throw DataError("unmixing file has no matrix");
    const auto d = static_cast<Eigen::Index>(io::split_csv_line(line).size()) - 1;
    if (d < 1) throw DataError("unmixing file has an empty matrix");
    out.W.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!std::getline(in, line)) throw DataError("unmixing matrix is truncated");
        const auto fields = io::split_csv_line(line);
        if (static_cast<Eigen::Index>(fields.size()) != d + 1) throw DataError("unmixing row has the wrong width");
        for (Eigen::Index j = 0; j < d; ++j)
            if (!io::parse_double(fields[static_cast<std::size_t>(j + 1)], out.W(i, j)))
                throw DataError("bad value in unmixing matrix");
    }
    return out;
}

UnmixingMatrix read_unmixing(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    return read_unmixing(in);
}

}  // namespace tailica
