#include "assocmem/packer.hpp"

#include "assocmem/text.hpp"

#include <algorithm>

namespace assocmem {

namespace {

std::string one_line(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

std::string render_item(const PackedItem& item) {
    if (item.kind != NodeKind::Episode) return "- " + one_line(item.text);
    std::string line = "- [" + item.timestamp + "] ";
    if (!item.speaker.empty()) line += one_line(item.speaker) + ": ";
    return line + one_line(item.text);
}

std::string render_sections(const MemoryPack& p) {
    std::string out;
    auto section = [&](const char* title, const std::vector<PackedItem>& items) {
        if (items.empty()) return;
        if (!out.empty()) out += "\n";
        out += title;
        out += "\n";
        for (const auto& it : items) out += render_item(it) + "\n";
    };
    section("Reflections:", p.reflections);
    section("Facts:", p.facts);
    section("Episodes:", p.episodes);
    return out;
}

void sort_episodes(std::vector<PackedItem>& eps) {
    std::stable_sort(eps.begin(), eps.end(), [](const PackedItem& a, const PackedItem& b) {
        if (a.seq != b.seq) return a.seq < b.seq;
        return a.node_id < b.node_id;
    });
}

}  // namespace

std::vector<std::string> MemoryPack::included_ids() const {
    std::vector<std::string> ids;
    for (const auto* bucket : {&reflections, &facts, &episodes}) {
        for (const auto& it : *bucket) ids.push_back(it.node_id);
    }
    return ids;
}

MemoryPack pack(std::span<const ScoredCandidate> candidates, const GraphStore& graph, const PackLimits& limits) {
    MemoryPack p;
    for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
        const auto& c = candidates[rank];
        const MemoryNode* node = graph.find(c.node_id);
        if (!node || node->kind == NodeKind::Concept) continue;

        std::vector<PackedItem>* bucket = nullptr;
        std::size_t cap = 0;
        switch (node->kind) {
            case NodeKind::Reflection: bucket = &p.reflections; cap = limits.max_reflections; break;
            case NodeKind::Fact: bucket = &p.facts; cap = limits.max_facts; break;
            case NodeKind::Episode: bucket = &p.episodes; cap = limits.max_episodes; break;
            case NodeKind::Concept: break;
        }
        if (!bucket || bucket->size() >= cap) continue;
        if (std::any_of(bucket->begin(), bucket->end(), [&](const PackedItem& x) { return x.node_id == c.node_id; })) {
            continue;
        }
        PackedItem item;
        item.node_id = node->id;
        item.kind = node->kind;
        item.text = node->text;
        item.score = c.score;
        item.rank = rank;
        item.seq = node->seq.value_or(0);
        item.timestamp = node->timestamp.value_or("");
        item.speaker = node->speaker.value_or("");
        bucket->push_back(std::move(item));
    }
    sort_episodes(p.episodes);

    // Drop the globally lowest-ranked item until the rendered text fits. Each
    // section header is one word; item lines are counted once up front.
    std::vector<std::pair<std::size_t, std::vector<PackedItem>*>> order;  // (rank, bucket)
    std::size_t words = 0;
    for (auto* bucket : {&p.reflections, &p.facts, &p.episodes}) {
        if (!bucket->empty()) ++words;
        for (const auto& it : *bucket) {
            words += text::count_words(render_item(it));
            order.emplace_back(it.rank, bucket);
        }
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [rank, bucket] : order) {
        if (words <= limits.max_memory_words) break;
        auto at = std::find_if(bucket->begin(), bucket->end(), [r = rank](const PackedItem& x) { return x.rank == r; });
        words -= text::count_words(render_item(*at));
        p.trimmed.push_back(at->node_id);
        bucket->erase(at);
        if (bucket->empty()) --words;
    }
    p.word_count = words;
    p.memory_text = render(p);
    return p;
}

std::string render(const MemoryPack& pack) {
    if (pack.empty()) return std::string(kEmptyMemory);
    return render_sections(pack);
}

}  // namespace assocmem
