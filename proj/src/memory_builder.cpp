#include "assocmem/memory_builder.hpp"

#include "assocmem/parsers.hpp"
#include "assocmem/prompts.hpp"
#include "assocmem/text.hpp"

#include <algorithm>
#include <set>

namespace assocmem {

namespace {

constexpr std::size_t kEmbedBatch = 64;

std::vector<std::vector<float>> embed_batched(Gateway& gateway, const std::vector<std::string>& texts,
                                              BuildReport& report) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (std::size_t at = 0; at < texts.size(); at += kEmbedBatch) {
        const auto end = std::min(texts.size(), at + kEmbedBatch);
        std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(at),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        auto vecs = gateway.embed(batch);
        ++report.embed_calls;
        if (vecs.size() != batch.size()) throw Error(Errc::EmptyResponse, "embedding count mismatch");
        for (auto& v : vecs) out.push_back(std::move(v));
    }
    return out;
}

void embed_nodes(GraphStore& graph, VectorIndex& index, Gateway& gateway, const std::vector<std::string>& ids,
                 BuildReport& report) {
    if (ids.empty()) return;
    std::vector<std::string> texts;
    texts.reserve(ids.size());
    for (const auto& id : ids) texts.push_back(graph.node(id).text);
    auto vecs = embed_batched(gateway, texts, report);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        index.upsert(ids[i], graph.node(ids[i]).kind, vecs[i]);
        graph.set_embedding(ids[i], std::move(vecs[i]));
    }
}

std::uint64_t next_seq(const GraphStore& graph, const std::string& conversation_id) {
    std::uint64_t next = 0;
    for (const auto& n : graph.nodes()) {
        if (n.kind == NodeKind::Episode && n.conversation_id == conversation_id && n.seq) next = std::max(next, *n.seq + 1);
    }
    return next;
}

std::string join_texts(const GraphStore& graph, const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += "\n";
        out += graph.node(id).text;
    }
    return out;
}

std::string episode_line(const MemoryNode& n) {
    return prompt_lines::episode(n.timestamp.value_or(""), n.speaker.value_or(""), n.text, n.id);
}

void validate_session(const ConversationSession& s) {
    if (s.conversation_id.empty()) throw Error(Errc::InvalidArgument, "session without conversation id");
    if (s.session_id.empty()) throw Error(Errc::InvalidArgument, s.conversation_id + ": session without id");
    if (s.session_timestamp.empty()) throw Error(Errc::InvalidArgument, s.session_id + ": session without timestamp");
    if (s.turns.empty()) throw Error(Errc::InvalidArgument, s.session_id + ": session has no turns");
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        if (s.turns[i].text.empty()) {
            throw Error(Errc::InvalidArgument, s.session_id + ": turn " + std::to_string(i) + " has empty text");
        }
    }
}

// Step 1: verbatim episodes chained by NEXT. Returns the new episode ids.
std::vector<std::string> add_episodes(GraphStore& graph, const ConversationSession& session, BuildReport& report) {
    std::uint64_t seq = next_seq(graph, session.conversation_id);
    std::vector<std::string> ids;
    for (const auto& turn : session.turns) {
        MemoryNode n;
        n.id = episode_id(session.conversation_id, session.session_id, seq, turn.text);
        n.kind = NodeKind::Episode;
        n.text = turn.text;
        n.conversation_id = session.conversation_id;
        n.session_id = session.session_id;
        n.timestamp = session.session_timestamp;
        n.seq = seq++;
        n.speaker = turn.speaker;
        ids.push_back(graph.add_node(std::move(n)));
        ++report.episodes_created;
    }
    for (std::size_t i = 1; i < ids.size(); ++i) graph.add_edge({ids[i - 1], ids[i], EdgeKind::Next, 1.0});
    return ids;
}

class ChunkWriter {
public:
    ChunkWriter(GraphStore& graph, const ConversationSession& session, BuildReport& report)
        : graph_(graph), session_(session), report_(report) {}

    // Finds or creates the concept; empty when the label is unusable.
    std::string concept_for(const std::string& raw_label, bool count_reuse) {
        const std::string label = text::normalize_concept_label(raw_label);
        if (!text::is_concept_label(label)) {
            warn("concept label '" + raw_label + "' is not 2-5 word snake_case; skipped");
            return {};
        }
        if (auto existing = graph_.concept_by_label(label)) {
            if (count_reuse && !created_here_.contains(*existing)) ++report_.concepts_reused;
            return *existing;
        }
        MemoryNode c;
        c.id = concept_id(label);
        c.kind = NodeKind::Concept;
        c.text = label;
        c.conversation_id = session_.conversation_id;
        const auto& id = graph_.add_node(std::move(c));
        created_here_.insert(id);
        ++report_.concepts_created;
        return id;
    }

    bool is_kind(const std::string& id, NodeKind kind) const {
        const auto* n = graph_.find(id);
        return n && n->kind == kind;
    }

    void warn(std::string w) { report_.warnings.push_back(std::move(w)); }

private:
    GraphStore& graph_;
    const ConversationSession& session_;
    BuildReport& report_;
    std::set<std::string> created_here_;
};

// Step 2 for one chunk. Returns ids of newly created facts.
std::vector<std::string> extract_chunk(GraphStore& graph, VectorIndex& index, Gateway& gateway,
                                       const ConversationSession& session, const std::vector<std::string>& chunk,
                                       const std::vector<std::string>& exclude, std::size_t chunk_no,
                                       const BuilderConfig& config, BuildReport& report) {
    std::vector<std::string> chunk_texts;
    for (const auto& id : chunk) chunk_texts.push_back(graph.node(id).text);
    const auto ctx = resolve_context(graph, index, gateway, chunk_texts, config.context_k, exclude);
    if (!chunk_texts.empty() && config.context_k > 0 && !index.empty()) ++report.embed_calls;

    std::vector<std::string> fact_lines, concept_lines, related_lines, new_lines;
    for (const auto& id : ctx.facts) fact_lines.push_back(prompt_lines::item(graph.node(id).text, id));
    for (const auto& n : graph.nodes()) {
        if (n.kind == NodeKind::Concept) concept_lines.push_back(prompt_lines::label(n.text));
    }
    for (const auto& id : ctx.episodes) related_lines.push_back(episode_line(graph.node(id)));
    for (const auto& id : chunk) new_lines.push_back(episode_line(graph.node(id)));

    const std::string prompt = render_prompt(PromptName::FactConceptExtraction,
                                             {{"existing_facts", prompt_lines::join(fact_lines)},
                                              {"existing_concepts", prompt_lines::join(concept_lines)},
                                              {"related_episodes", prompt_lines::join(related_lines)},
                                              {"new_episodes", prompt_lines::join(new_lines)}});
    const std::string raw = gateway.chat(chat_request(gateway, prompt));
    ++report.llm_calls;

    ChunkWriter w(graph, session, report);
    const std::string where = session.session_id + " chunk " + std::to_string(chunk_no);
    ExtractionResult parsed;
    try {
        parsed = parse_extraction(raw);
    } catch (const Error& e) {
        w.warn(where + ": extraction output skipped (" + e.what() + ")");
        return {};
    }

    for (const auto& c : parsed.concepts) {
        const auto cid = w.concept_for(c.label, true);
        if (cid.empty()) continue;
        for (const auto& ep : c.episode_ids) {
            if (!w.is_kind(ep, NodeKind::Episode)) {
                w.warn(where + ": concept '" + c.label + "' cites unknown episode '" + ep + "'; edge dropped");
                continue;
            }
            graph.add_edge_if_absent({ep, cid, EdgeKind::HasConcept, 1.0});
        }
    }

    std::vector<std::string> created;
    for (const auto& f : parsed.facts) {
        const std::string body = text::trim(f.text);
        if (body.empty()) {
            w.warn(where + ": fact with empty text skipped");
            continue;
        }
        const std::string id = fact_id(session.conversation_id, body);
        const bool is_new = !graph.contains(id);
        if (is_new) {
            MemoryNode n;
            n.id = id;
            n.kind = NodeKind::Fact;
            n.text = body;
            n.conversation_id = session.conversation_id;
            n.session_id = session.session_id;
            n.timestamp = session.session_timestamp;
            n.belief = f.belief;
            graph.add_node(std::move(n));
            created.push_back(id);
            ++report.facts_created;
        } else if (!w.is_kind(id, NodeKind::Fact)) {
            w.warn(where + ": fact id collision for '" + body + "'; skipped");
            continue;
        }
        std::size_t provenance = 0;
        for (const auto& ep : f.source_episode_ids) {
            if (!w.is_kind(ep, NodeKind::Episode)) {
                w.warn(where + ": fact '" + body + "' cites unknown episode '" + ep + "'; edge dropped");
                continue;
            }
            graph.add_edge_if_absent({id, ep, EdgeKind::DerivedFrom, 1.0});
            ++provenance;
        }
        if (provenance == 0 && is_new) w.warn(where + ": fact '" + body + "' has no source episode");
        for (const auto& label : f.concepts) {
            const auto cid = w.concept_for(label, false);
            if (!cid.empty()) graph.add_edge_if_absent({id, cid, EdgeKind::AboutConcept, 1.0});
        }
    }
    embed_nodes(graph, index, gateway, created, report);
    return created;
}

// Step 3 over the session's new facts.
void reflect(GraphStore& graph, VectorIndex& index, Gateway& gateway, const ConversationSession& session,
             const std::vector<std::string>& new_facts, const BuilderConfig& config, BuildReport& report) {
    if (new_facts.empty()) return;

    std::vector<std::string> related, existing;
    if (config.context_k > 0) {
        const auto query = embed_one(gateway, join_texts(graph, new_facts));
        ++report.embed_calls;
        const std::set<std::string> skip(new_facts.begin(), new_facts.end());
        for (const auto& hit : index.knn(query, config.context_k + skip.size(), std::set{NodeKind::Fact})) {
            if (!skip.contains(hit.node_id) && related.size() < config.context_k) related.push_back(hit.node_id);
        }
        for (const auto& hit : index.knn(query, config.context_k, std::set{NodeKind::Reflection})) {
            existing.push_back(hit.node_id);
        }
    }
    std::vector<std::string> existing_lines, related_lines, new_lines;
    for (const auto& id : existing) existing_lines.push_back(prompt_lines::item(graph.node(id).text, id));
    for (const auto& id : related) related_lines.push_back(prompt_lines::item(graph.node(id).text, id));
    for (const auto& id : new_facts) new_lines.push_back(prompt_lines::item(graph.node(id).text, id));

    const std::string prompt = render_prompt(PromptName::ReflectionGeneration,
                                             {{"existing_reflections", prompt_lines::join(existing_lines)},
                                              {"related_facts", prompt_lines::join(related_lines)},
                                              {"new_facts", prompt_lines::join(new_lines)}});
    const std::string raw = gateway.chat(chat_request(gateway, prompt));
    ++report.llm_calls;

    ChunkWriter w(graph, session, report);
    const std::string where = session.session_id + " reflections";
    std::vector<ExtractedReflection> parsed;
    try {
        parsed = parse_reflections(raw);
    } catch (const Error& e) {
        w.warn(where + ": reflection output skipped (" + e.what() + ")");
        return;
    }

    std::vector<std::string> created;
    for (const auto& r : parsed) {
        const std::string body = text::trim(r.text);
        std::vector<std::string> sources;
        for (const auto& f : r.source_fact_ids) {
            if (w.is_kind(f, NodeKind::Fact)) {
                sources.push_back(f);
            } else {
                w.warn(where + ": reflection cites unknown fact '" + f + "'; edge dropped");
            }
        }
        if (body.empty() || sources.empty()) {
            w.warn(where + ": reflection '" + body + "' has no usable source fact; skipped");
            continue;
        }
        const std::string id = reflection_id(session.conversation_id, body);
        if (!graph.contains(id)) {
            MemoryNode n;
            n.id = id;
            n.kind = NodeKind::Reflection;
            n.text = body;
            n.conversation_id = session.conversation_id;
            n.session_id = session.session_id;
            n.timestamp = session.session_timestamp;
            n.belief = r.belief;
            graph.add_node(std::move(n));
            created.push_back(id);
            ++report.reflections_created;
        } else if (!w.is_kind(id, NodeKind::Reflection)) {
            continue;
        }
        for (const auto& f : sources) graph.add_edge_if_absent({id, f, EdgeKind::DerivedFromFact, 1.0});
    }
    embed_nodes(graph, index, gateway, created, report);
}

BuildReport ingest_session_unguarded(GraphStore& graph, VectorIndex& index, Gateway& gateway,
                                     const ConversationSession& session, const BuilderConfig& config) {
    BuildReport report;
    const auto episodes = add_episodes(graph, session, report);
    embed_nodes(graph, index, gateway, episodes, report);

    const std::size_t chunk_size = std::max<std::size_t>(1, config.chunk_size);
    std::vector<std::string> session_facts;
    for (std::size_t at = 0, chunk_no = 0; at < episodes.size(); at += chunk_size, ++chunk_no) {
        const auto end = std::min(episodes.size(), at + chunk_size);
        std::vector<std::string> chunk(episodes.begin() + static_cast<std::ptrdiff_t>(at),
                                       episodes.begin() + static_cast<std::ptrdiff_t>(end));
        // Only older episodes count as context: this chunk and later turns are excluded.
        std::vector<std::string> exclude(episodes.begin() + static_cast<std::ptrdiff_t>(at), episodes.end());
        auto facts = extract_chunk(graph, index, gateway, session, chunk, exclude, chunk_no, config, report);
        session_facts.insert(session_facts.end(), facts.begin(), facts.end());
    }
    reflect(graph, index, gateway, session, session_facts, config, report);
    return report;
}

}  // namespace

BuildReport& BuildReport::operator+=(const BuildReport& o) {
    episodes_created += o.episodes_created;
    facts_created += o.facts_created;
    concepts_created += o.concepts_created;
    concepts_reused += o.concepts_reused;
    reflections_created += o.reflections_created;
    llm_calls += o.llm_calls;
    embed_calls += o.embed_calls;
    warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
    return *this;
}

std::string episode_id(const std::string& conversation_id, const std::string& session_id, std::uint64_t seq,
                       const std::string& text) {
    return "ep-" + text::content_hash({conversation_id, session_id, std::to_string(seq), text});
}

std::string fact_id(const std::string& conversation_id, const std::string& text) {
    return "fact-" + text::content_hash({conversation_id, text});
}

std::string reflection_id(const std::string& conversation_id, const std::string& text) {
    return "refl-" + text::content_hash({conversation_id, text});
}

std::string concept_id(const std::string& label) { return "concept-" + text::content_hash({label}); }

RelatedContext resolve_context(const GraphStore& graph, const VectorIndex& index, Gateway& gateway,
                               const std::vector<std::string>& new_episode_texts, std::size_t k,
                               const std::vector<std::string>& exclude) {
    RelatedContext ctx;
    if (k == 0 || index.empty() || new_episode_texts.empty()) return ctx;
    std::string joined;
    for (const auto& t : new_episode_texts) {
        if (!joined.empty()) joined += "\n";
        joined += t;
    }
    const auto query = embed_one(gateway, joined);
    const std::set<std::string> skip(exclude.begin(), exclude.end());
    for (const auto& hit : index.knn(query, k + skip.size(), std::set{NodeKind::Episode})) {
        if (!skip.contains(hit.node_id) && graph.contains(hit.node_id) && ctx.episodes.size() < k) {
            ctx.episodes.push_back(hit.node_id);
        }
    }
    for (const auto& hit : index.knn(query, k + skip.size(), std::set{NodeKind::Fact})) {
        if (!skip.contains(hit.node_id) && graph.contains(hit.node_id) && ctx.facts.size() < k) {
            ctx.facts.push_back(hit.node_id);
        }
    }
    return ctx;
}

BuildReport ingest_session(GraphStore& graph, VectorIndex& index, Gateway& gateway, const ConversationSession& session,
                           const BuilderConfig& config) {
    validate_session(session);
    GraphStore graph_before = graph;
    VectorIndex index_before = index;
    try {
        return ingest_session_unguarded(graph, index, gateway, session, config);
    } catch (...) {
        graph = std::move(graph_before);
        index = std::move(index_before);
        throw;
    }
}

BuildReport ingest_conversation(GraphStore& graph, VectorIndex& index, Gateway& gateway,
                                const std::vector<ConversationSession>& sessions, const BuilderConfig& config) {
    BuildReport total;
    for (const auto& s : sessions) total += ingest_session(graph, index, gateway, s, config);
    return total;
}

BuildReport ingest_episodes_only(GraphStore& graph, VectorIndex& index, Gateway& gateway,
                                 const std::vector<ConversationSession>& sessions) {
    BuildReport report;
    for (const auto& s : sessions) {
        validate_session(s);
        const auto ids = add_episodes(graph, s, report);
        embed_nodes(graph, index, gateway, ids, report);
    }
    return report;
}

}  // namespace assocmem
