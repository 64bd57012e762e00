#pragma once
// Three-step memory construction for one conversation:
//   1. every turn becomes a verbatim Episode, chained by NEXT inside its
//      session (no model calls)
//   2. per chunk of episodes, the extraction prompt yields Facts
//      (DERIVED_FROM, ABOUT_CONCEPT) and Concepts (HAS_CONCEPT)
//   3. once per session, the reflection prompt yields Reflections
//      (DERIVED_FROM_FACT) over the session's new facts

#include "assocmem/gateway.hpp"
#include "assocmem/graph_store.hpp"
#include "assocmem/vector_index.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace assocmem {

struct Turn {
    std::string speaker;
    std::string text;
};

struct ConversationSession {
    std::string conversation_id;
    std::string session_id;
    std::string session_timestamp;  // ISO-8601
    std::vector<Turn> turns;
};

struct BuilderConfig {
    std::size_t chunk_size = 20;
    std::size_t context_k = 20;

    bool operator==(const BuilderConfig&) const = default;
};

struct BuildReport {
    std::size_t episodes_created = 0;
    std::size_t facts_created = 0;
    std::size_t concepts_created = 0;
    std::size_t concepts_reused = 0;
    std::size_t reflections_created = 0;
    std::size_t llm_calls = 0;
    std::size_t embed_calls = 0;
    std::vector<std::string> warnings;

    BuildReport& operator+=(const BuildReport& other);
};

struct RelatedContext {
    std::vector<std::string> episodes;  // node ids, most similar first
    std::vector<std::string> facts;
};

// The k most similar historical Episodes and Facts to the concatenated
// texts. `exclude` ids are never returned.
RelatedContext resolve_context(const GraphStore& graph, const VectorIndex& index, Gateway& gateway,
                               const std::vector<std::string>& new_episode_texts, std::size_t k,
                               const std::vector<std::string>& exclude = {});

// Gateway failures roll graph and index back to their state before the call
// and rethrow; malformed model output only skips the affected chunk.
BuildReport ingest_session(GraphStore& graph, VectorIndex& index, Gateway& gateway, const ConversationSession& session,
                           const BuilderConfig& config = {});

BuildReport ingest_conversation(GraphStore& graph, VectorIndex& index, Gateway& gateway,
                                const std::vector<ConversationSession>& sessions, const BuilderConfig& config = {});

// Episode-only ingest (step 1 plus embeddings), used by the flat baseline.
BuildReport ingest_episodes_only(GraphStore& graph, VectorIndex& index, Gateway& gateway,
                                 const std::vector<ConversationSession>& sessions);

std::string episode_id(const std::string& conversation_id, const std::string& session_id, std::uint64_t seq,
                       const std::string& text);
std::string fact_id(const std::string& conversation_id, const std::string& text);
std::string reflection_id(const std::string& conversation_id, const std::string& text);
std::string concept_id(const std::string& label);

}  // namespace assocmem
