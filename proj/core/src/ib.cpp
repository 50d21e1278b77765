#include "mmmem/ib.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mmmem/error.hpp"
#include "mmmem/text.hpp"

namespace mmmem {

namespace {

std::string cell(std::size_t r, std::size_t c) {
    return "(" + std::to_string(r) + ", " + std::to_string(c) + ")";
}

void check_entries(const ProbTable& t, const char* name) {
    if (t.rows == 0 || t.cols == 0 || t.data.size() != t.rows * t.cols) {
        throw DomainError(std::string(name) + ": empty or misshapen table");
    }
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t c = 0; c < t.cols; ++c) {
            const double v = t(r, c);
            if (!std::isfinite(v) || v < 0.0) {
                throw DomainError(std::string(name) + ": invalid entry at " + cell(r, c));
            }
        }
    }
}

double xlogy_ratio(double p, double q) { return p > 0.0 ? p * std::log(p / q) : 0.0; }

}  // namespace

void validate_joint(const ProbTable& joint) {
    check_entries(joint, "joint");
    if (joint.rows > kMaxX || joint.cols > kMaxY) throw DomainError("joint: alphabet too large");
    double s = 0.0;
    for (double v : joint.data) s += v;
    if (std::abs(s - 1.0) > kTableTolerance) throw DomainError("joint: entries sum to " + format_double(s));
}

void validate_conditional(const ProbTable& table, const char* name) {
    check_entries(table, name);
    for (std::size_t r = 0; r < table.rows; ++r) {
        double s = 0.0;
        for (double v : table.row(r)) s += v;
        if (std::abs(s - 1.0) > kTableTolerance) {
            throw DomainError(std::string(name) + ": row " + std::to_string(r) + " sums to " + format_double(s));
        }
    }
}

void validate_marginal(std::span<const double> dist, const char* name) {
    if (dist.empty()) throw DomainError(std::string(name) + ": empty distribution");
    double s = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (!std::isfinite(dist[i]) || dist[i] < 0.0) {
            throw DomainError(std::string(name) + ": invalid entry at " + std::to_string(i));
        }
        s += dist[i];
    }
    if (std::abs(s - 1.0) > kTableTolerance) throw DomainError(std::string(name) + ": sums to " + format_double(s));
}

void validate_instance(const IbInstance& inst) {
    validate_joint(inst.joint);
    validate_conditional(inst.encoder, "encoder");
    validate_conditional(inst.decoder, "decoder");
    validate_marginal(inst.prior, "prior");
    if (inst.encoder.rows != inst.nx()) throw DomainError("encoder: row count differs from |X|");
    if (inst.nm() > kMaxM) throw DomainError("encoder: |M| too large");
    if (inst.decoder.rows != inst.nm() || inst.decoder.cols != inst.ny()) {
        throw DomainError("decoder: expected |M| x |Y|");
    }
    if (inst.prior.size() != inst.nm()) throw DomainError("prior: length differs from |M|");
}

double shannon_entropy(std::span<const double> dist) {
    double h = 0.0;
    for (double p : dist) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

std::vector<double> row_marginal(const ProbTable& joint) {
    std::vector<double> m(joint.rows, 0.0);
    for (std::size_t r = 0; r < joint.rows; ++r) {
        for (double v : joint.row(r)) m[r] += v;
    }
    return m;
}

std::vector<double> col_marginal(const ProbTable& joint) {
    std::vector<double> m(joint.cols, 0.0);
    for (std::size_t r = 0; r < joint.rows; ++r) {
        for (std::size_t c = 0; c < joint.cols; ++c) m[c] += joint(r, c);
    }
    return m;
}

double mutual_information(const ProbTable& joint) {
    check_entries(joint, "joint");
    const auto pr = row_marginal(joint);
    const auto pc = col_marginal(joint);
    double mi = 0.0;
    for (std::size_t r = 0; r < joint.rows; ++r) {
        for (std::size_t c = 0; c < joint.cols; ++c) mi += xlogy_ratio(joint(r, c), pr[r] * pc[c]);
    }
    return mi;
}

ProbTable joint_xm(const ProbTable& joint, const ProbTable& encoder) {
    const auto px = row_marginal(joint);
    ProbTable out(joint.rows, encoder.cols);
    for (std::size_t x = 0; x < joint.rows; ++x) {
        for (std::size_t m = 0; m < encoder.cols; ++m) out(x, m) = px[x] * encoder(x, m);
    }
    return out;
}

ProbTable joint_my(const ProbTable& joint, const ProbTable& encoder) {
    ProbTable out(encoder.cols, joint.cols);
    for (std::size_t x = 0; x < joint.rows; ++x) {
        for (std::size_t m = 0; m < encoder.cols; ++m) {
            const double pmx = encoder(x, m);
            if (pmx == 0.0) continue;
            for (std::size_t y = 0; y < joint.cols; ++y) out(m, y) += joint(x, y) * pmx;
        }
    }
    return out;
}

ProbTable optimal_decoder(const ProbTable& joint, const ProbTable& encoder) {
    ProbTable q = joint_my(joint, encoder);
    for (std::size_t m = 0; m < q.rows; ++m) {
        double pm = 0.0;
        for (double v : q.row(m)) pm += v;
        for (std::size_t y = 0; y < q.cols; ++y) {
            q(m, y) = pm > 0.0 ? q(m, y) / pm : 1.0 / static_cast<double>(q.cols);
        }
    }
    return q;
}

std::vector<double> optimal_prior(const ProbTable& joint, const ProbTable& encoder) {
    return col_marginal(joint_xm(joint, encoder));
}

LpResult l_p(const ProbTable& joint, const ProbTable& encoder, const ProbTable& decoder) {
    const ProbTable pmy = joint_my(joint, encoder);
    LpResult res;
    for (std::size_t m = 0; m < pmy.rows; ++m) {
        for (std::size_t y = 0; y < pmy.cols; ++y) {
            const double p = pmy(m, y);
            if (p == 0.0) continue;
            const double q = decoder(m, y);
            if (q <= 0.0) {
                if (!res.unbounded) {
                    res.bad_m = m;
                    res.bad_y = y;
                }
                res.unbounded = true;
                continue;
            }
            res.value += p * std::log(q);
        }
    }
    if (res.unbounded) res.value = -std::numeric_limits<double>::infinity();
    return res;
}

double l_c(std::span<const double> px, const ProbTable& encoder, std::span<const double> prior) {
    if (px.size() != encoder.rows || prior.size() != encoder.cols) throw DomainError("l_c: shape mismatch");
    double total = 0.0;
    for (std::size_t x = 0; x < encoder.rows; ++x) {
        if (px[x] == 0.0) continue;  // unreachable x contributes nothing
        double kl = 0.0;
        for (std::size_t m = 0; m < encoder.cols; ++m) {
            const double p = encoder(x, m);
            if (p == 0.0) continue;
            if (prior[m] <= 0.0) throw DomainError("l_c: prior has no mass where encoder does at (x, m) = " + cell(x, m));
            kl += p * std::log(p / prior[m]);
        }
        total += px[x] * kl;
    }
    return total;
}

BoundReport verify_bounds(const IbInstance& inst) {
    validate_instance(inst);
    BoundReport rep;
    rep.i_xm = mutual_information(joint_xm(inst.joint, inst.encoder));
    rep.i_my = mutual_information(joint_my(inst.joint, inst.encoder));
    rep.h_y = shannon_entropy(col_marginal(inst.joint));
    const LpResult lp = l_p(inst.joint, inst.encoder, inst.decoder);
    rep.l_p = lp.value;
    rep.lp_unbounded = lp.unbounded;
    rep.l_c = l_c(row_marginal(inst.joint), inst.encoder, inst.prior);
    rep.slack_pred = lp.unbounded ? std::numeric_limits<double>::infinity() : rep.i_my - (rep.l_p + rep.h_y);
    rep.slack_comp = rep.l_c - rep.i_xm;
    return rep;
}

double variational_ib_objective(const IbInstance& inst, double beta) {
    validate_instance(inst);
    const LpResult lp = l_p(inst.joint, inst.encoder, inst.decoder);
    return beta * lp.value - l_c(row_marginal(inst.joint), inst.encoder, inst.prior);
}

std::vector<double> quality_quantity_prior(std::span<const double> reference, std::span<const double> lengths,
                                           double lambda) {
    validate_marginal(reference, "reference prior");
    if (lengths.size() != reference.size()) throw DomainError("quality_quantity_prior: length map size mismatch");
    if (!std::isfinite(lambda) || lambda < 0.0) throw DomainError("quality_quantity_prior: lambda must be >= 0");
    for (double l : lengths) {
        if (!std::isfinite(l) || l < 0.0) throw DomainError("quality_quantity_prior: lengths must be >= 0");
    }
    // Shift by the smallest length so exp never underflows for the best symbol.
    double min_len = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (reference[i] > 0.0) min_len = std::min(min_len, lengths[i]);
    }
    std::vector<double> r(reference.size());
    double z = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        r[i] = reference[i] * std::exp(-lambda * (lengths[i] - min_len));
        z += r[i];
    }
    for (double& v : r) v /= z;
    return r;
}

namespace {

double uniform01(std::mt19937_64& rng) { return unit_double(rng()); }

std::size_t draw_dim(std::mt19937_64& rng, std::size_t max_dim) {
    return 2 + std::min(max_dim - 2, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(max_dim - 1)));
}

// Random row with each entry zeroed with probability `zero_p`; at least one
// entry survives.
std::vector<double> random_row(std::mt19937_64& rng, std::size_t n, double zero_p) {
    std::vector<double> w(n);
    double s = 0.0;
    for (auto& v : w) {
        v = uniform01(rng) < zero_p ? 0.0 : -std::log(1.0 - uniform01(rng));
        s += v;
    }
    if (s == 0.0) {
        w[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n] = 1.0;
        s = 1.0;
    }
    for (auto& v : w) v /= s;
    return w;
}

}  // namespace

IbInstance random_instance(std::mt19937_64& rng, std::size_t max_dim) {
    max_dim = std::clamp<std::size_t>(max_dim, 2, kMaxY);
    const std::size_t nx = draw_dim(rng, max_dim);
    const std::size_t ny = draw_dim(rng, max_dim);
    const std::size_t nm = draw_dim(rng, max_dim);
    IbInstance inst;
    const auto flat = random_row(rng, nx * ny, 0.2);
    inst.joint = ProbTable(nx, ny);
    inst.joint.data = flat;
    inst.encoder = ProbTable(nx, nm);
    for (std::size_t x = 0; x < nx; ++x) {
        const auto row = random_row(rng, nm, 0.25);
        std::copy(row.begin(), row.end(), inst.encoder.data.begin() + static_cast<std::ptrdiff_t>(x * nm));
    }
    inst.decoder = ProbTable(nm, ny);
    for (std::size_t m = 0; m < nm; ++m) {
        const auto row = random_row(rng, ny, 0.0);
        std::copy(row.begin(), row.end(), inst.decoder.data.begin() + static_cast<std::ptrdiff_t>(m * ny));
    }
    inst.prior = random_row(rng, nm, 0.0);
    return inst;
}

IbInstance deterministic_chain_instance() {
    IbInstance inst;
    inst.joint = ProbTable(2, 2);
    inst.joint(0, 0) = 0.5;
    inst.joint(1, 1) = 0.5;
    inst.encoder = ProbTable(2, 2);
    inst.encoder(0, 0) = 1.0;
    inst.encoder(1, 1) = 1.0;
    inst.decoder = optimal_decoder(inst.joint, inst.encoder);
    inst.prior = optimal_prior(inst.joint, inst.encoder);
    return inst;
}

namespace {

class TokenStream {
public:
    explicit TokenStream(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok) tokens_.push_back(tok);
        }
    }

    std::string next(const char* what) {
        if (pos_ >= tokens_.size()) throw ParseError(std::string("instance file: missing ") + what);
        return tokens_[pos_++];
    }

    std::size_t next_dim(const char* what) {
        const std::string t = next(what);
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != t.size() || v <= 0) throw ParseError(std::string("instance file: bad dimension ") + what + " '" + t + "'");
        return static_cast<std::size_t>(v);
    }

    double next_prob(const char* what) {
        const std::string t = next(what);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != t.size()) throw ParseError(std::string("instance file: bad number in ") + what + " '" + t + "'");
        return v;
    }

    bool exhausted() const { return pos_ >= tokens_.size(); }

private:
    std::vector<std::string> tokens_;
    std::size_t pos_ = 0;
};

void fill(TokenStream& ts, ProbTable& t, const char* what) {
    for (double& v : t.data) v = ts.next_prob(what);
}

void write_rows(std::ostream& out, const ProbTable& t) {
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t c = 0; c < t.cols; ++c) out << (c ? " " : "") << format_double(t(r, c));
        out << '\n';
    }
}

}  // namespace

IbInstance read_instance(std::istream& in) {
    TokenStream ts(in);
    const std::size_t nx = ts.next_dim("|X|");
    const std::size_t ny = ts.next_dim("|Y|");
    const std::size_t nm = ts.next_dim("|M|");
    if (nx > kMaxX || ny > kMaxY || nm > kMaxM) throw DomainError("instance file: alphabet exceeds supported size");
    IbInstance inst;
    inst.joint = ProbTable(nx, ny);
    inst.encoder = ProbTable(nx, nm);
    inst.decoder = ProbTable(nm, ny);
    inst.prior.assign(nm, 0.0);
    fill(ts, inst.joint, "joint");
    fill(ts, inst.encoder, "encoder");
    fill(ts, inst.decoder, "decoder");
    for (double& v : inst.prior) v = ts.next_prob("prior");
    if (!ts.exhausted()) throw ParseError("instance file: trailing data after prior");
    validate_instance(inst);
    return inst;
}

void write_instance(std::ostream& out, const IbInstance& inst) {
    out << inst.nx() << ' ' << inst.ny() << ' ' << inst.nm() << '\n';
    write_rows(out, inst.joint);
    write_rows(out, inst.encoder);
    write_rows(out, inst.decoder);
    for (std::size_t m = 0; m < inst.prior.size(); ++m) out << (m ? " " : "") << format_double(inst.prior[m]);
    out << '\n';
}

void write_bound_report(std::ostream& out, const BoundReport& r) {
    out << "i_xm=" << format_double(r.i_xm) << '\n'
        << "i_my=" << format_double(r.i_my) << '\n'
        << "l_p=" << (r.lp_unbounded ? std::string("-inf") : format_double(r.l_p)) << '\n'
        << "l_c=" << format_double(r.l_c) << '\n'
        << "h_y=" << format_double(r.h_y) << '\n'
        << "slack_pred=" << (r.lp_unbounded ? std::string("inf") : format_double(r.slack_pred)) << '\n'
        << "slack_comp=" << format_double(r.slack_comp) << '\n'
        << "lp_unbounded=" << (r.lp_unbounded ? "true" : "false") << '\n';
}

}  // namespace mmmem
