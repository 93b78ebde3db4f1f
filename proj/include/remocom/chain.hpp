#pragma once

#include "remocom/belief.hpp"
#include "remocom/model.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace remocom {

/// Node count above which exact evaluation refuses to build the chain.
inline constexpr int kChainNodeCap = 200000;
/// Systems at or below this size are solved densely, above it sparsely.
inline constexpr int kDenseSolveCap = 2000;

struct ChainSizeExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using SparseMat = Eigen::SparseMatrix<double>;

/// Solve x = b + gamma * T x for every column of b.
inline Eigen::MatrixXd solve_discounted(const SparseMat& T, double gamma,
                                        const Eigen::MatrixXd& b) {
    const int n = static_cast<int>(T.rows());
    if (n <= kDenseSolveCap) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - gamma * Eigen::MatrixXd(T);
        return A.partialPivLu().solve(b);
    }
    SparseMat A(n, n);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(T.nonZeros()) + n);
    for (int k = 0; k < T.outerSize(); ++k)
        for (SparseMat::InnerIterator it(T, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                               -gamma * it.value());
    for (int i = 0; i < n; ++i) trips.emplace_back(i, i, 1.0);
    A.setFromTriplets(trips.begin(), trips.end(), [](double a, double b2) { return a + b2; });
    Eigen::SparseLU<SparseMat> lu(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("sparse factorization failed");
    return lu.solve(b);
}

/// Strongly connected components (iterative Tarjan) of the support graph.
inline std::vector<int> strongly_connected_components(const SparseMat& T, int* n_comp_out) {
    const int n = static_cast<int>(T.rows());
    // Row-major adjacency is needed for per-node successor scans.
    Eigen::SparseMatrix<double, Eigen::RowMajor> R(T);
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    int next_index = 0, n_comp = 0;

    struct Frame {
        int v;
        Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it;
    };
    for (int start = 0; start < n; ++start) {
        if (index[start] >= 0) continue;
        std::vector<Frame> frames;
        frames.push_back({start, {R, start}});
        index[start] = low[start] = next_index++;
        stack.push_back(start);
        on_stack[start] = 1;
        while (!frames.empty()) {
            auto& f = frames.back();
            bool descended = false;
            for (; f.it; ++f.it) {
                if (f.it.value() <= 0.0) continue;
                const int w = static_cast<int>(f.it.col());
                if (index[w] < 0) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    ++f.it;
                    frames.push_back({w, {R, w}});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
            }
            if (descended) continue;
            const int v = f.v;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
            if (low[v] == index[v]) {
                while (true) {
                    const int w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp[w] = n_comp;
                    if (w == v) break;
                }
                ++n_comp;
            }
        }
    }
    if (n_comp_out != nullptr) *n_comp_out = n_comp;
    return comp;
}

/// Recurrent-class and absorption decomposition of a finite chain, enough to
/// read off long-run Cesàro averages of any per-node signal.
struct ChainAnalysis {
    std::vector<std::vector<int>> classes;  // recurrent classes, node lists
    std::vector<Eigen::VectorXd> stationary;  // per class, aligned with classes[k]
    Eigen::MatrixXd absorb;  // node x class absorption probabilities
};

inline ChainAnalysis analyze_chain(const SparseMat& T) {
    const int n = static_cast<int>(T.rows());
    int n_comp = 0;
    std::vector<int> comp = strongly_connected_components(T, &n_comp);
    std::vector<char> closed(static_cast<size_t>(n_comp), 1);
    for (int k = 0; k < T.outerSize(); ++k)
        for (SparseMat::InnerIterator it(T, k); it; ++it)
            if (it.value() > 0.0 && comp[it.row()] != comp[it.col()])
                closed[static_cast<size_t>(comp[it.row()])] = 0;

    ChainAnalysis out;
    std::vector<int> class_of_comp(static_cast<size_t>(n_comp), -1);
    for (int c = 0; c < n_comp; ++c) {
        if (!closed[static_cast<size_t>(c)]) continue;
        class_of_comp[static_cast<size_t>(c)] = static_cast<int>(out.classes.size());
        out.classes.emplace_back();
    }
    for (int v = 0; v < n; ++v) {
        const int k = class_of_comp[static_cast<size_t>(comp[v])];
        if (k >= 0) out.classes[static_cast<size_t>(k)].push_back(v);
    }

    Eigen::SparseMatrix<double, Eigen::RowMajor> R(T);
    for (const auto& nodes : out.classes) {
        const int m = static_cast<int>(nodes.size());
        std::vector<int> pos(n, -1);
        for (int i = 0; i < m; ++i) pos[nodes[static_cast<size_t>(i)]] = i;
        // (I - Pc^T) pi = 0 with one row replaced by the normalization.
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
        for (int i = 0; i < m; ++i)
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, nodes[static_cast<size_t>(i)]); it; ++it) {
                const int j = pos[it.col()];
                if (j >= 0) A(j, i) -= it.value();
            }
        A.row(0).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        rhs(0) = 1.0;
        Eigen::VectorXd pi = A.partialPivLu().solve(rhs);
        for (int i = 0; i < m; ++i) pi(i) = std::max(pi(i), 0.0);
        pi /= pi.sum();
        out.stationary.push_back(pi);
    }

    const int K = static_cast<int>(out.classes.size());
    std::vector<int> node_class(n, -1);
    for (int k = 0; k < K; ++k)
        for (int v : out.classes[static_cast<size_t>(k)]) node_class[v] = k;

    out.absorb = Eigen::MatrixXd::Zero(n, K);
    std::vector<int> transient;
    std::vector<int> tpos(n, -1);
    for (int v = 0; v < n; ++v) {
        if (node_class[v] >= 0) out.absorb(v, node_class[v]) = 1.0;
        else {
            tpos[v] = static_cast<int>(transient.size());
            transient.push_back(v);
        }
    }
    const int nt = static_cast<int>(transient.size());
    if (nt > 0) {
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(nt, nt);
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nt, K);
        for (int i = 0; i < nt; ++i)
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, transient[static_cast<size_t>(i)]); it; ++it) {
                const int w = static_cast<int>(it.col());
                if (node_class[w] >= 0) B(i, node_class[w]) += it.value();
                else Q(i, tpos[w]) += it.value();
            }
        Eigen::MatrixXd X = (Eigen::MatrixXd::Identity(nt, nt) - Q).partialPivLu().solve(B);
        for (int i = 0; i < nt; ++i) out.absorb.row(transient[static_cast<size_t>(i)]) = X.row(i);
    }
    return out;
}

/// Long-run average of signal f per step, starting from `init` over nodes.
inline double long_run_rate(const ChainAnalysis& ca, const Eigen::VectorXd& init,
                            const Eigen::VectorXd& f) {
    double rate = 0.0;
    for (size_t k = 0; k < ca.classes.size(); ++k) {
        double weight = 0.0;
        for (int v = 0; v < init.size(); ++v)
            if (init(v) > 0.0) weight += init(v) * ca.absorb(v, static_cast<int>(k));
        if (weight <= 0.0) continue;
        double mean = 0.0;
        const auto& nodes = ca.classes[k];
        for (size_t i = 0; i < nodes.size(); ++i)
            mean += ca.stationary[k](static_cast<int>(i)) * f(nodes[i]);
        rate += weight * mean;
    }
    return rate;
}

/// Limiting state distribution (Cesàro) over nodes, mixing class stationaries
/// by absorption mass from `init`.
inline Eigen::VectorXd limiting_distribution(const ChainAnalysis& ca, const Eigen::VectorXd& init) {
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(init.size());
    for (size_t k = 0; k < ca.classes.size(); ++k) {
        double weight = 0.0;
        for (int v = 0; v < init.size(); ++v)
            if (init(v) > 0.0) weight += init(v) * ca.absorb(v, static_cast<int>(k));
        if (weight <= 0.0) continue;
        const auto& nodes = ca.classes[k];
        for (size_t i = 0; i < nodes.size(); ++i)
            mix(nodes[i]) += weight * ca.stationary[k](static_cast<int>(i));
    }
    return mix;
}

/// Closed chain over post-decision nodes <s, delta, s_last> induced by a
/// joint (decoder, encoder) policy pair. delta = 0 forces s_last = s.
struct InducedChain {
    int n_states = 0;
    int t_max = 0;
    int node_count = 0;
    SparseMat T;
    Eigen::VectorXd er;    // expected instant reward leaving the node
    Eigen::VectorXd ptx;   // probability the next step transmits
    Eigen::VectorXd init;  // xi mass on renewal nodes
    std::vector<int> node_s, node_delta, node_slast;

    int renewal_node(int s) const { return s; }
    int node_id(int s, int delta, int s_last) const {
        if (delta == 0) return s;
        return n_states + ((delta - 1) * n_states + s_last) * n_states + s;
    }
};

inline InducedChain build_induced_chain(const ControlledMarkovProcess& mdp,
                                        const DecoderPolicy& dec, const EncoderPolicy& enc) {
    const int n = mdp.n_states;
    const int t_max = enc.t_max;
    InducedChain ch;
    ch.n_states = n;
    ch.t_max = t_max;
    ch.node_count = n + n * n * std::max(0, t_max - 1);
    if (ch.node_count > kChainNodeCap)
        throw ChainSizeExceeded("induced chain would have " + std::to_string(ch.node_count) +
                                " nodes (cap " + std::to_string(kChainNodeCap) + ")");
    ch.er = Eigen::VectorXd::Zero(ch.node_count);
    ch.ptx = Eigen::VectorXd::Zero(ch.node_count);
    ch.init = Eigen::VectorXd::Zero(ch.node_count);
    ch.node_s.assign(static_cast<size_t>(ch.node_count), 0);
    ch.node_delta.assign(static_cast<size_t>(ch.node_count), 0);
    ch.node_slast.assign(static_cast<size_t>(ch.node_count), 0);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(ch.node_count) * n);
    auto expand = [&](int id, int s, int delta, int s_last) {
        ch.node_s[static_cast<size_t>(id)] = s;
        ch.node_delta[static_cast<size_t>(id)] = delta;
        ch.node_slast[static_cast<size_t>(id)] = s_last;
        const int a = dec.act(delta, s_last);
        double er = 0.0, ptx = 0.0;
        for (int t = 0; t < n; ++t) {
            const double p = mdp.P(a)(s, t);
            if (p <= 0.0) continue;
            er += p * mdp.R(a)(s, t);
            const int c = enc.decide(t, delta + 1, s_last);
            int next;
            if (c) {
                ptx += p;
                next = ch.renewal_node(t);
            } else {
                if (delta + 1 >= t_max)
                    throw std::invalid_argument("encoder policy must transmit at t_max");
                next = ch.node_id(t, delta + 1, s_last);
            }
            trips.emplace_back(id, next, p);
        }
        ch.er(id) = er;
        ch.ptx(id) = ptx;
    };

    for (int s = 0; s < n; ++s) expand(ch.renewal_node(s), s, 0, s);
    for (int delta = 1; delta <= t_max - 1; ++delta)
        for (int sl = 0; sl < n; ++sl)
            for (int s = 0; s < n; ++s) expand(ch.node_id(s, delta, sl), s, delta, sl);

    ch.T = SparseMat(ch.node_count, ch.node_count);
    ch.T.setFromTriplets(trips.begin(), trips.end(),
                         [](double a, double b) { return a + b; });
    for (int s = 0; s < n; ++s) ch.init(ch.renewal_node(s)) = mdp.initial_dist(s);
    return ch;
}

}  // namespace remocom
