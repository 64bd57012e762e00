#pragma once
// Shared domain vocabulary: node/edge kinds, the graph schema table and the
// library-wide error type.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace assocmem {

enum class NodeKind { Episode, Fact, Reflection, Concept };

enum class EdgeKind { Next, DerivedFrom, DerivedFromFact, HasConcept, AboutConcept };

inline constexpr std::array<NodeKind, 4> kAllNodeKinds{NodeKind::Episode, NodeKind::Fact,
                                                       NodeKind::Reflection, NodeKind::Concept};
inline constexpr std::array<EdgeKind, 5> kAllEdgeKinds{EdgeKind::Next, EdgeKind::DerivedFrom,
                                                       EdgeKind::DerivedFromFact, EdgeKind::HasConcept,
                                                       EdgeKind::AboutConcept};

std::string_view to_string(NodeKind kind);
std::string_view to_string(EdgeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view s);
std::optional<EdgeKind> parse_edge_kind(std::string_view s);

// The only legal (source kind, target kind) pair for each edge kind.
constexpr std::pair<NodeKind, NodeKind> endpoint_kinds(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::Next: return {NodeKind::Episode, NodeKind::Episode};
        case EdgeKind::DerivedFrom: return {NodeKind::Fact, NodeKind::Episode};
        case EdgeKind::DerivedFromFact: return {NodeKind::Reflection, NodeKind::Fact};
        case EdgeKind::HasConcept: return {NodeKind::Episode, NodeKind::Concept};
        case EdgeKind::AboutConcept: return {NodeKind::Fact, NodeKind::Concept};
    }
    return {NodeKind::Episode, NodeKind::Episode};
}

enum class Errc {
    DuplicateId,
    DuplicateConceptLabel,
    InvariantViolation,
    UnknownEndpoint,
    SchemaViolation,
    DuplicateEdge,
    UnknownNode,
    IoFailure,
    CorruptFile,
    DimensionMismatch,
    ZeroNorm,
    MissingEmbedding,
    AuthFailure,
    RateLimited,
    TransportFailure,
    EmptyResponse,
    DimensionDrift,
    MalformedJson,
    MissingField,
    EmptyCandidates,
    NonStochasticInput,
    EmptyGraph,
    ParseFailure,
    UnknownCategoryCode,
    ConfigError,
    InvalidArgument,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code), detail_(detail) {}

    Errc code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

    // Errors raised by a model provider (network, auth, limits, bad payloads).
    bool is_gateway_failure() const noexcept {
        return code_ == Errc::AuthFailure || code_ == Errc::RateLimited || code_ == Errc::TransportFailure ||
               code_ == Errc::EmptyResponse || code_ == Errc::DimensionDrift;
    }

private:
    Errc code_;
    std::string detail_;
};

}  // namespace assocmem
