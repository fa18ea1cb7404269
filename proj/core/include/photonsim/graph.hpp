#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace photonsim::graph {

enum class Pauli : std::uint8_t { I, X, Y, Z };

char pauli_char(Pauli p);
Pauli pauli_from_char(char c);

/// Signed n-qubit Pauli operator, e.g. "-YZZY".
struct PauliString {
    std::vector<Pauli> letters;
    int sign = +1;

    PauliString() = default;
    PauliString(std::vector<Pauli> l, int s = +1);

    int size() const { return static_cast<int>(letters.size()); }
    std::string to_string() const;
    /// Letters only, no sign; used as the measurement-setting key.
    std::string setting() const;
    static PauliString from_string(const std::string& s);

    bool commutes_with(const PauliString& other) const;
    bool operator==(const PauliString& o) const { return sign == o.sign && letters == o.letters; }
};

/// Product with full sign tracking. Throws if the result carries an
/// imaginary phase (cannot happen for products of commuting Hermitian
/// Pauli operators such as stabilizer elements).
PauliString multiply(const PauliString& a, const PauliString& b);

/// Undirected simple graph on vertices 0..n-1.
struct Graph {
    int n = 0;
    std::set<std::pair<int, int>> edges;  // pairs stored with first < second

    Graph() = default;
    explicit Graph(int vertices) : n(vertices) {}

    void add_edge(int a, int b);
    bool has_edge(int a, int b) const;
    std::vector<int> neighbors(int v) const;

    /// Star with the given center vertex.
    static Graph star(int vertices, int center);
    /// Path visiting the listed vertices in order.
    static Graph path(const std::vector<int>& order);
};

/// Generators and all 2^n products of a graph-state stabilizer group.
/// elements[mask] is the product of generators i with bit i set in mask.
struct StabilizerGroup {
    std::vector<PauliString> generators;
    std::vector<PauliString> elements;

    int n_qubits() const { return static_cast<int>(generators.size()); }
    std::size_t size() const { return elements.size(); }
};

/// g_i = X on vertex i, Z on its neighbors. Expands the full group.
/// Throws for graphs with more than 16 vertices.
StabilizerGroup generators_from_graph(const Graph& g);

/// Projective-measurement counts: (setting, outcome pattern) -> counts.
/// Outcome bits are ordered most-significant = qubit 1, and bit 0 means
/// the +1 eigenvector of that qubit's measured letter.
class CountsTable {
  public:
    void add(const std::string& setting, const std::string& outcome, std::int64_t counts);
    std::int64_t counts(const std::string& setting, const std::string& outcome) const;
    std::int64_t total(const std::string& setting) const;
    bool has_setting(const std::string& setting) const;
    std::vector<std::string> settings() const;
    const std::map<std::pair<std::string, std::string>, std::int64_t>& entries() const { return entries_; }

    /// Outcome counts for one setting ordered by outcome bit pattern.
    std::vector<std::int64_t> outcome_vector(const std::string& setting, int n_qubits) const;

    void write_csv(std::ostream& os) const;
    static CountsTable read_csv(std::istream& is);

  private:
    std::map<std::pair<std::string, std::string>, std::int64_t> entries_;
};

/// Eigenvalue product lambda_j = prod_k mu_j^(k) for an outcome pattern;
/// identity letters contribute +1.
int outcome_eigenvalue(const PauliString& op, unsigned outcome_bits);

/// <g> = sum_j lambda_j C_j / sum_j C_j, including the element's sign.
/// Throws when the setting is missing or has zero total counts.
double expectation_from_counts(const CountsTable& table, const PauliString& stabilizer);

struct FidelityResult {
    double value = 0.0;
    bool witness = false;  // value > 1/2 certifies genuine multipartite entanglement
};

/// F = mean of the 2^n stabilizer expectations (identity counted as +1).
FidelityResult fidelity(const std::vector<double>& expectations);

/// A two-setting Mermin combination: four stabilizer elements given by
/// their generator masks.
struct MerminVariant {
    std::string name;
    std::array<unsigned, 4> masks{};
};

struct MerminResult {
    std::string variant;
    double value = 0.0;
    double classical_bound = 0.0;
    double quantum_bound = 0.0;
    std::vector<std::pair<std::string, double>> terms;
};

/// Every two-setting Mermin combination the state's stabilizers admit,
/// including the graph-symmetry substitutions. Supported shapes: stars
/// (any center, n >= 3) and the four-vertex line.
std::vector<MerminVariant> two_setting_variants(const Graph& g);

MerminResult mermin_two_setting(const StabilizerGroup& group, const std::vector<double>& expectations,
                                const MerminVariant& variant);

/// All variants evaluated plus the optimum (last entry duplicates the best
/// variant under the name "best").
std::vector<MerminResult> mermin_two_setting_all(const StabilizerGroup& group,
                                                 const std::vector<double>& expectations,
                                                 const std::vector<MerminVariant>& variants);

/// Sum of all 2^n stabilizer expectations; identical to 2^n * fidelity.
MerminResult mermin_three_setting(const std::vector<double>& expectations);

/// Z-measurement rule with outcome |0>: deleting the measured vertices and
/// their incident edges leaves the graph of the projected state.
Graph project_zero(const Graph& g, const std::set<int>& qubits_to_remove);

/// |G> = prod_edges CZ |+>^n as 2^n amplitudes, qubit 0 most significant.
Eigen::VectorXcd ideal_state_vector(const Graph& g);

/// Applies a signed Pauli string to a state vector (oracle helper).
Eigen::VectorXcd apply_pauli(const Eigen::VectorXcd& state, const PauliString& op);

/// Projects the listed qubits onto |0> and drops them; returns the
/// renormalized residual vector and the projection probability.
std::pair<Eigen::VectorXcd, double> project_zero_state(const Eigen::VectorXcd& state, int n_qubits,
                                                       const std::set<int>& qubits_to_remove);

}  // namespace photonsim::graph
