#include "photonsim/graph.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace photonsim::graph {

char pauli_char(Pauli p) {
    switch (p) {
        case Pauli::I: return 'I';
        case Pauli::X: return 'X';
        case Pauli::Y: return 'Y';
        case Pauli::Z: return 'Z';
    }
    return '?';
}

Pauli pauli_from_char(char c) {
    switch (c) {
        case 'I': return Pauli::I;
        case 'X': return Pauli::X;
        case 'Y': return Pauli::Y;
        case 'Z': return Pauli::Z;
        default: throw std::invalid_argument(std::string("invalid Pauli letter: ") + c);
    }
}

PauliString::PauliString(std::vector<Pauli> l, int s) : letters(std::move(l)), sign(s) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
}

std::string PauliString::to_string() const {
    std::string s = sign < 0 ? "-" : "+";
    for (auto p : letters) s.push_back(pauli_char(p));
    return s;
}

std::string PauliString::setting() const {
    std::string s;
    s.reserve(letters.size());
    for (auto p : letters) s.push_back(pauli_char(p));
    return s;
}

PauliString PauliString::from_string(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty Pauli string");
    int sign = +1;
    std::size_t start = 0;
    if (s[0] == '+' || s[0] == '-') {
        sign = s[0] == '-' ? -1 : +1;
        start = 1;
    }
    std::vector<Pauli> letters;
    for (std::size_t i = start; i < s.size(); ++i) letters.push_back(pauli_from_char(s[i]));
    return PauliString(std::move(letters), sign);
}

namespace {

// single-qubit product a*b -> (letter, power of i in {0,1,3})
std::pair<Pauli, int> letter_product(Pauli a, Pauli b) {
    if (a == Pauli::I) return {b, 0};
    if (b == Pauli::I) return {a, 0};
    if (a == b) return {Pauli::I, 0};
    // XY=iZ, YZ=iX, ZX=iY and the reversed orders pick up -i
    static constexpr std::array<std::array<Pauli, 3>, 3> third = {{
        {Pauli::I, Pauli::Z, Pauli::Y},  // X row: XX, XY, XZ
        {Pauli::Z, Pauli::I, Pauli::X},  // Y row
        {Pauli::Y, Pauli::X, Pauli::I},  // Z row
    }};
    int ia = static_cast<int>(a) - 1, ib = static_cast<int>(b) - 1;
    Pauli out = third[ia][ib];
    bool forward = (ib - ia + 3) % 3 == 1;  // X->Y->Z->X order
    return {out, forward ? 1 : 3};
}

}  // namespace

bool PauliString::commutes_with(const PauliString& other) const {
    if (size() != other.size()) throw std::invalid_argument("length mismatch");
    int anti = 0;
    for (int i = 0; i < size(); ++i) {
        Pauli a = letters[i], b = other.letters[i];
        if (a != Pauli::I && b != Pauli::I && a != b) ++anti;
    }
    return anti % 2 == 0;
}

PauliString multiply(const PauliString& a, const PauliString& b) {
    if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
    std::vector<Pauli> letters(a.size());
    int phase = 0;  // power of i mod 4
    for (int i = 0; i < a.size(); ++i) {
        auto [p, ph] = letter_product(a.letters[i], b.letters[i]);
        letters[i] = p;
        phase = (phase + ph) % 4;
    }
    if (phase % 2 != 0) throw std::invalid_argument("product carries an imaginary phase");
    int sign = a.sign * b.sign * (phase == 2 ? -1 : +1);
    return PauliString(std::move(letters), sign);
}

void Graph::add_edge(int a, int b) {
    if (a == b) throw std::invalid_argument("self-loops are not allowed");
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::out_of_range("vertex out of range");
    edges.insert({std::min(a, b), std::max(a, b)});
}

bool Graph::has_edge(int a, int b) const { return edges.count({std::min(a, b), std::max(a, b)}) > 0; }

std::vector<int> Graph::neighbors(int v) const {
    std::vector<int> out;
    for (const auto& [a, b] : edges) {
        if (a == v) out.push_back(b);
        if (b == v) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Graph Graph::star(int vertices, int center) {
    Graph g(vertices);
    for (int v = 0; v < vertices; ++v)
        if (v != center) g.add_edge(v, center);
    return g;
}

Graph Graph::path(const std::vector<int>& order) {
    int n = static_cast<int>(order.size());
    Graph g(n);
    for (int i = 0; i + 1 < n; ++i) g.add_edge(order[i], order[i + 1]);
    return g;
}

StabilizerGroup generators_from_graph(const Graph& g) {
    if (g.n > 16) throw std::invalid_argument("graphs over 16 vertices are not supported");
    if (g.n < 1) throw std::invalid_argument("graph needs at least one vertex");
    StabilizerGroup grp;
    for (int v = 0; v < g.n; ++v) {
        std::vector<Pauli> letters(g.n, Pauli::I);
        letters[v] = Pauli::X;
        for (int w : g.neighbors(v)) letters[w] = Pauli::Z;
        grp.generators.emplace_back(std::move(letters));
    }
    const unsigned count = 1u << g.n;
    grp.elements.resize(count, PauliString(std::vector<Pauli>(g.n, Pauli::I)));
    for (unsigned mask = 1; mask < count; ++mask) {
        unsigned lsb = mask & (~mask + 1u);
        int bit = std::countr_zero(lsb);
        grp.elements[mask] = multiply(grp.elements[mask ^ lsb], grp.generators[bit]);
    }
    return grp;
}

void CountsTable::add(const std::string& setting, const std::string& outcome, std::int64_t counts) {
    if (counts < 0) throw std::invalid_argument("counts must be non-negative");
    entries_[{setting, outcome}] += counts;
}

std::int64_t CountsTable::counts(const std::string& setting, const std::string& outcome) const {
    auto it = entries_.find({setting, outcome});
    return it == entries_.end() ? 0 : it->second;
}

std::int64_t CountsTable::total(const std::string& setting) const {
    std::int64_t t = 0;
    for (const auto& [key, c] : entries_)
        if (key.first == setting) t += c;
    return t;
}

bool CountsTable::has_setting(const std::string& setting) const {
    for (const auto& [key, c] : entries_)
        if (key.first == setting) return true;
    return false;
}

std::vector<std::string> CountsTable::settings() const {
    std::vector<std::string> out;
    for (const auto& [key, c] : entries_)
        if (out.empty() || out.back() != key.first) out.push_back(key.first);
    return out;
}

std::vector<std::int64_t> CountsTable::outcome_vector(const std::string& setting, int n_qubits) const {
    std::vector<std::int64_t> out(1u << n_qubits, 0);
    for (const auto& [key, c] : entries_) {
        if (key.first != setting) continue;
        unsigned idx = 0;
        for (char b : key.second) idx = (idx << 1) | (b == '1' ? 1u : 0u);
        out.at(idx) = c;
    }
    return out;
}

void CountsTable::write_csv(std::ostream& os) const {
    os << "setting,outcome,counts\n";
    for (const auto& [key, c] : entries_) os << key.first << ',' << key.second << ',' << c << '\n';
}

CountsTable CountsTable::read_csv(std::istream& is) {
    CountsTable table;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("setting", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        std::stringstream ss(line);
        std::string setting, outcome, counts;
        if (!std::getline(ss, setting, ',') || !std::getline(ss, outcome, ',') || !std::getline(ss, counts))
            throw std::runtime_error("malformed counts CSV line: " + line);
        table.add(setting, outcome, std::stoll(counts));
    }
    return table;
}

int outcome_eigenvalue(const PauliString& op, unsigned outcome_bits) {
    int lambda = 1;
    const int n = op.size();
    for (int q = 0; q < n; ++q) {
        if (op.letters[q] == Pauli::I) continue;
        if ((outcome_bits >> (n - 1 - q)) & 1u) lambda = -lambda;
    }
    return lambda;
}

double expectation_from_counts(const CountsTable& table, const PauliString& stabilizer) {
    bool all_identity = std::all_of(stabilizer.letters.begin(), stabilizer.letters.end(),
                                    [](Pauli p) { return p == Pauli::I; });
    if (all_identity) return static_cast<double>(stabilizer.sign);

    const std::string setting = stabilizer.setting();
    if (!table.has_setting(setting)) throw std::invalid_argument("counts table is missing setting " + setting);
    auto outcomes = table.outcome_vector(setting, stabilizer.size());
    std::int64_t total = 0;
    std::int64_t weighted = 0;
    for (unsigned j = 0; j < outcomes.size(); ++j) {
        total += outcomes[j];
        weighted += outcome_eigenvalue(stabilizer, j) * outcomes[j];
    }
    if (total == 0) throw std::invalid_argument("zero total counts for setting " + setting);
    return stabilizer.sign * static_cast<double>(weighted) / static_cast<double>(total);
}

FidelityResult fidelity(const std::vector<double>& expectations) {
    if (expectations.empty()) throw std::invalid_argument("no expectations given");
    double sum = 0.0;
    for (double e : expectations) sum += e;
    double f = sum / static_cast<double>(expectations.size());
    return {f, f > 0.5};
}

namespace {

std::string mask_name(unsigned mask) {
    std::string s = "g{";
    bool firstbit = true;
    for (int b = 0; b < 16; ++b) {
        if (mask & (1u << b)) {
            if (!firstbit) s += ',';
            s += std::to_string(b + 1);
            firstbit = false;
        }
    }
    s += '}';
    return mask ? s : "I";
}

}  // namespace

std::vector<MerminVariant> two_setting_variants(const Graph& g) {
    auto degree = [&](int v) { return static_cast<int>(g.neighbors(v).size()); };

    // star detection: one vertex adjacent to all others, which are degree 1
    int center = -1;
    for (int v = 0; v < g.n; ++v)
        if (degree(v) == g.n - 1) center = v;
    bool is_star = center >= 0 && static_cast<int>(g.edges.size()) == g.n - 1 && g.n >= 3;

    std::vector<MerminVariant> out;
    auto bit = [](int v) { return 1u << v; };

    if (is_star) {
        std::vector<int> leaves;
        for (int v = 0; v < g.n; ++v)
            if (v != center) leaves.push_back(v);
        const unsigned c = bit(center);

        if (leaves.size() == 3) {
            // M = g_c(1 + g_i g_j + g_i g_k + g_j g_k) and its center substitutions
            std::array<unsigned, 4> base = {c, c | bit(leaves[0]) | bit(leaves[1]),
                                            c | bit(leaves[0]) | bit(leaves[2]),
                                            c | bit(leaves[1]) | bit(leaves[2])};
            out.push_back({"II", base});
            for (int l : leaves) {
                std::array<unsigned, 4> sub = base;
                for (auto& m : sub) m ^= bit(l);
                out.push_back({"II.center*g" + std::to_string(l + 1), sub});
            }
        }
        // M = g_c(1 + g_i)(1 + g_j) per leaf pair, plus center substitutions
        for (std::size_t a = 0; a < leaves.size(); ++a) {
            for (std::size_t b = a + 1; b < leaves.size(); ++b) {
                int i = leaves[a], j = leaves[b];
                std::array<unsigned, 4> base = {c, c | bit(i), c | bit(j), c | bit(i) | bit(j)};
                std::string nm = "II'." + std::to_string(i + 1) + std::to_string(j + 1);
                out.push_back({nm, base});
                for (int k : leaves) {
                    if (k == i || k == j) continue;
                    std::array<unsigned, 4> sub = base;
                    for (auto& m : sub) m ^= bit(k);
                    out.push_back({nm + ".center*g" + std::to_string(k + 1), sub});
                }
            }
        }
        return out;
    }

    // four-vertex line: ends have degree 1, middles degree 2
    if (g.n == 4 && g.edges.size() == 3) {
        std::vector<int> mids, ends;
        for (int v = 0; v < 4; ++v) (degree(v) == 2 ? mids : ends).push_back(v);
        if (mids.size() == 2 && ends.size() == 2) {
            int b = mids[0], cmid = mids[1];
            // orient so end `a` neighbors `b`
            int a = g.has_edge(ends[0], b) ? ends[0] : ends[1];
            int d = a == ends[0] ? ends[1] : ends[0];
            unsigned B = bit(b), C = bit(cmid), A = bit(a), D = bit(d);

            out.push_back({"II", {B, B | C, B | A, B | C | A}});
            out.push_back({"II.g2*g4", {B, B | C | D, B | A, B | C | A | D}});
            out.push_back({"II'", {B | C, B | D, B | C | A, B | A | D}});
            out.push_back({"II'.g2*g4", {B | C | D, B | D, B | C | A | D, B | A | D}});
            out.push_back({"II'.shift", {B | A, C | D, B | D, C | A}});
            return out;
        }
    }

    throw std::invalid_argument("no two-setting Mermin construction for this graph");
}

MerminResult mermin_two_setting(const StabilizerGroup& group, const std::vector<double>& expectations,
                                const MerminVariant& variant) {
    if (expectations.size() != group.size())
        throw std::invalid_argument("expectation count does not match group size");
    MerminResult res;
    res.variant = variant.name;
    res.classical_bound = 2.0;
    res.quantum_bound = 4.0;
    for (unsigned mask : variant.masks) {
        if (mask >= group.size()) throw std::invalid_argument("unknown variant: mask out of range");
        res.value += expectations[mask];
        res.terms.emplace_back(group.elements[mask].to_string() + " " + mask_name(mask), expectations[mask]);
    }
    return res;
}

std::vector<MerminResult> mermin_two_setting_all(const StabilizerGroup& group,
                                                 const std::vector<double>& expectations,
                                                 const std::vector<MerminVariant>& variants) {
    if (variants.empty()) throw std::invalid_argument("no variants given");
    std::vector<MerminResult> out;
    out.reserve(variants.size() + 1);
    std::size_t best = 0;
    for (std::size_t i = 0; i < variants.size(); ++i) {
        out.push_back(mermin_two_setting(group, expectations, variants[i]));
        if (out[i].value > out[best].value) best = i;
    }
    MerminResult top = out[best];
    top.variant = "best:" + top.variant;
    out.push_back(std::move(top));
    return out;
}

MerminResult mermin_three_setting(const std::vector<double>& expectations) {
    const std::size_t size = expectations.size();
    if (size < 4 || (size & (size - 1)) != 0)
        throw std::invalid_argument("expected all 2^n stabilizer expectations");
    int n = std::countr_zero(size);
    MerminResult res;
    res.variant = "III";
    res.quantum_bound = static_cast<double>(size);
    res.classical_bound = n == 2 ? 2.0 : 3.0 * static_cast<double>(1u << (n - 2));
    for (double e : expectations) res.value += e;
    return res;
}

Graph project_zero(const Graph& g, const std::set<int>& qubits_to_remove) {
    for (int q : qubits_to_remove)
        if (q < 0 || q >= g.n) throw std::out_of_range("vertex out of range");
    if (static_cast<int>(qubits_to_remove.size()) >= g.n && g.n > 0)
        throw std::invalid_argument("cannot remove every vertex");

    // old vertex -> new index, preserving order
    std::vector<int> remap(g.n, -1);
    int next = 0;
    for (int v = 0; v < g.n; ++v)
        if (!qubits_to_remove.count(v)) remap[v] = next++;

    Graph out(next);
    for (const auto& [a, b] : g.edges)
        if (remap[a] >= 0 && remap[b] >= 0) out.add_edge(remap[a], remap[b]);
    return out;
}

Eigen::VectorXcd ideal_state_vector(const Graph& g) {
    if (g.n > 16) throw std::invalid_argument("graphs over 16 vertices are not supported");
    const int n = g.n;
    const Eigen::Index dim = Eigen::Index(1) << n;
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(dim, std::pow(2.0, -0.5 * n));
    for (const auto& [a, b] : g.edges) {
        for (Eigen::Index z = 0; z < dim; ++z) {
            bool za = (z >> (n - 1 - a)) & 1;
            bool zb = (z >> (n - 1 - b)) & 1;
            if (za && zb) v(z) = -v(z);
        }
    }
    return v;
}

Eigen::VectorXcd apply_pauli(const Eigen::VectorXcd& state, const PauliString& op) {
    const int n = op.size();
    if (state.size() != (Eigen::Index(1) << n)) throw std::invalid_argument("state dimension mismatch");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(state.size());
    const std::complex<double> im{0.0, 1.0};
    for (Eigen::Index z = 0; z < state.size(); ++z) {
        Eigen::Index target = z;
        std::complex<double> phase = static_cast<double>(op.sign);
        for (int q = 0; q < n; ++q) {
            const Eigen::Index mask = Eigen::Index(1) << (n - 1 - q);
            bool bit = z & mask;
            switch (op.letters[q]) {
                case Pauli::I: break;
                case Pauli::X: target ^= mask; break;
                case Pauli::Y:
                    target ^= mask;
                    phase *= bit ? -im : im;
                    break;
                case Pauli::Z:
                    if (bit) phase = -phase;
                    break;
            }
        }
        out(target) += phase * state(z);
    }
    return out;
}

std::pair<Eigen::VectorXcd, double> project_zero_state(const Eigen::VectorXcd& state, int n_qubits,
                                                       const std::set<int>& qubits_to_remove) {
    if (state.size() != (Eigen::Index(1) << n_qubits)) throw std::invalid_argument("state dimension mismatch");
    const int m = n_qubits - static_cast<int>(qubits_to_remove.size());
    if (m < 0) throw std::invalid_argument("removing more qubits than the state has");

    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Eigen::Index(1) << m);
    double prob = 0.0;
    for (Eigen::Index z = 0; z < state.size(); ++z) {
        bool keep = true;
        Eigen::Index compressed = 0;
        int outbit = 0;
        for (int q = 0; q < n_qubits; ++q) {
            bool bit = (z >> (n_qubits - 1 - q)) & 1;
            if (qubits_to_remove.count(q)) {
                if (bit) {
                    keep = false;
                    break;
                }
            } else {
                compressed |= Eigen::Index(bit) << (m - 1 - outbit);
                ++outbit;
            }
        }
        if (keep) {
            out(compressed) += state(z);
            prob += std::norm(state(z));
        }
    }
    if (prob > 0.0) out /= std::sqrt(prob);
    return {out, prob};
}

}  // namespace photonsim::graph
