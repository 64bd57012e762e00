#include "assocmem/types.hpp"

namespace assocmem {

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Episode: return "episode";
        case NodeKind::Fact: return "fact";
        case NodeKind::Reflection: return "reflection";
        case NodeKind::Concept: return "concept";
    }
    return "?";
}

std::string_view to_string(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::Next: return "NEXT";
        case EdgeKind::DerivedFrom: return "DERIVED_FROM";
        case EdgeKind::DerivedFromFact: return "DERIVED_FROM_FACT";
        case EdgeKind::HasConcept: return "HAS_CONCEPT";
        case EdgeKind::AboutConcept: return "ABOUT_CONCEPT";
    }
    return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
    for (NodeKind k : kAllNodeKinds) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::optional<EdgeKind> parse_edge_kind(std::string_view s) {
    for (EdgeKind k : kAllEdgeKinds) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::DuplicateConceptLabel: return "DuplicateConceptLabel";
        case Errc::InvariantViolation: return "InvariantViolation";
        case Errc::UnknownEndpoint: return "UnknownEndpoint";
        case Errc::SchemaViolation: return "SchemaViolation";
        case Errc::DuplicateEdge: return "DuplicateEdge";
        case Errc::UnknownNode: return "UnknownNode";
        case Errc::IoFailure: return "IoFailure";
        case Errc::CorruptFile: return "CorruptFile";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::ZeroNorm: return "ZeroNorm";
        case Errc::MissingEmbedding: return "MissingEmbedding";
        case Errc::AuthFailure: return "AuthFailure";
        case Errc::RateLimited: return "RateLimited";
        case Errc::TransportFailure: return "TransportFailure";
        case Errc::EmptyResponse: return "EmptyResponse";
        case Errc::DimensionDrift: return "DimensionDrift";
        case Errc::MalformedJson: return "MalformedJson";
        case Errc::MissingField: return "MissingField";
        case Errc::EmptyCandidates: return "EmptyCandidates";
        case Errc::NonStochasticInput: return "NonStochasticInput";
        case Errc::EmptyGraph: return "EmptyGraph";
        case Errc::ParseFailure: return "ParseFailure";
        case Errc::UnknownCategoryCode: return "UnknownCategoryCode";
        case Errc::ConfigError: return "ConfigError";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace assocmem
