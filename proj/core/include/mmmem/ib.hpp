#pragma once
// Exact finite-alphabet Information Bottleneck quantities.
//
// With p(x, y, m) = p(x, y) p(m | x):
//   L_p = E_{p(x,y) p(m|x)} [log q(y | m)]        and  I(M;Y) >= L_p + H(Y)
//   L_c = E_{p(x)} [KL(p(m | x) || r(m))]         and  I(X;M) <= L_c
// Both hold with equality exactly when q = p(y | m) and r = p(m).
// Everything is computed by enumeration in nats.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mmmem {

// Dense row-major probability table.
struct ProbTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    ProbTable() = default;
    ProbTable(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const ProbTable&) const = default;
};

inline constexpr std::size_t kMaxX = 16;
inline constexpr std::size_t kMaxY = 8;
inline constexpr std::size_t kMaxM = 16;
inline constexpr double kTableTolerance = 1e-12;

// Validation throws DomainError describing the first violation.
void validate_joint(const ProbTable& joint);        // |X| x |Y|, sums to 1
void validate_conditional(const ProbTable& table, const char* name);  // rows sum to 1
void validate_marginal(std::span<const double> dist, const char* name);

struct IbInstance {
    ProbTable joint;    // p(x, y)
    ProbTable encoder;  // p(m | x), |X| x |M|
    ProbTable decoder;  // q(y | m), |M| x |Y|
    std::vector<double> prior;  // r(m)

    std::size_t nx() const { return joint.rows; }
    std::size_t ny() const { return joint.cols; }
    std::size_t nm() const { return encoder.cols; }
};

void validate_instance(const IbInstance& instance);

double shannon_entropy(std::span<const double> dist);
std::vector<double> row_marginal(const ProbTable& joint);  // p(row)
std::vector<double> col_marginal(const ProbTable& joint);  // p(col)

double mutual_information(const ProbTable& joint);

// p(x, m) and p(m, y) under the Markov chain Y - X - M.
ProbTable joint_xm(const ProbTable& joint, const ProbTable& encoder);
ProbTable joint_my(const ProbTable& joint, const ProbTable& encoder);

// q(y | m) = p(y | m); rows with p(m) = 0 are uniform.
ProbTable optimal_decoder(const ProbTable& joint, const ProbTable& encoder);
// r(m) = p(m).
std::vector<double> optimal_prior(const ProbTable& joint, const ProbTable& encoder);

struct LpResult {
    double value = 0.0;
    // q(y|m) = 0 on a reachable (m, y): value is -inf.
    bool unbounded = false;
    std::size_t bad_m = 0;
    std::size_t bad_y = 0;
};

LpResult l_p(const ProbTable& joint, const ProbTable& encoder, const ProbTable& decoder);

// Throws DomainError naming (x, m) when r(m) = 0 where p(x) p(m|x) > 0.
double l_c(std::span<const double> px, const ProbTable& encoder, std::span<const double> prior);

struct BoundReport {
    double i_xm = 0.0;
    double i_my = 0.0;
    double l_p = 0.0;
    double l_c = 0.0;
    double h_y = 0.0;
    double slack_pred = 0.0;  // I(M;Y) - (L_p + H(Y))
    double slack_comp = 0.0;  // L_c - I(X;M)
    bool lp_unbounded = false;
};

BoundReport verify_bounds(const IbInstance& instance);

// beta * L_p - L_c
double variational_ib_objective(const IbInstance& instance, double beta);

// r(m) proportional to p_ref(m) * exp(-lambda * length(m)), normalized exactly.
std::vector<double> quality_quantity_prior(std::span<const double> reference, std::span<const double> lengths,
                                           double lambda);

// Random valid instance with |X|,|Y|,|M| drawn from [2, max_dim]; some
// entries are zeroed to exercise 0-mass terms. The prior stays strictly
// positive.
IbInstance random_instance(std::mt19937_64& rng, std::size_t max_dim = 8);

// Identity encoder over a uniform bit with X = Y, optimal decoder and prior.
IbInstance deterministic_chain_instance();

// Header `|X| |Y| |M|`, then joint, encoder, decoder (row per line) and the
// prior on one line. '#' comments allowed.
IbInstance read_instance(std::istream& in);
void write_instance(std::ostream& out, const IbInstance& instance);

// key=value per line.
void write_bound_report(std::ostream& out, const BoundReport& report);

}  // namespace mmmem
