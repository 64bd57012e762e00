#include "doctest.h"

#include "assocmem/text.hpp"
#include "assocmem/types.hpp"

using namespace assocmem;

TEST_CASE("kind names round trip") {
    for (auto k : kAllNodeKinds) CHECK(parse_node_kind(to_string(k)) == k);
    for (auto k : kAllEdgeKinds) CHECK(parse_edge_kind(to_string(k)) == k);
    CHECK(to_string(EdgeKind::DerivedFromFact) == "DERIVED_FROM_FACT");
    CHECK(to_string(NodeKind::Reflection) == "reflection");
    CHECK_FALSE(parse_node_kind("entity"));
    CHECK_FALSE(parse_edge_kind("next"));
}

TEST_CASE("schema table") {
    CHECK(endpoint_kinds(EdgeKind::Next) == std::pair{NodeKind::Episode, NodeKind::Episode});
    CHECK(endpoint_kinds(EdgeKind::DerivedFrom) == std::pair{NodeKind::Fact, NodeKind::Episode});
    CHECK(endpoint_kinds(EdgeKind::DerivedFromFact) == std::pair{NodeKind::Reflection, NodeKind::Fact});
    CHECK(endpoint_kinds(EdgeKind::HasConcept) == std::pair{NodeKind::Episode, NodeKind::Concept});
    CHECK(endpoint_kinds(EdgeKind::AboutConcept) == std::pair{NodeKind::Fact, NodeKind::Concept});
}

TEST_CASE("error carries its code") {
    const Error e(Errc::AuthFailure, "401");
    CHECK(e.code() == Errc::AuthFailure);
    CHECK(e.detail() == "401");
    CHECK(std::string(e.what()) == "AuthFailure: 401");
    CHECK(e.is_gateway_failure());
    CHECK_FALSE(Error(Errc::MalformedJson, "x").is_gateway_failure());
}

TEST_CASE("hashes are stable") {
    // Published FNV-1a 64 test vectors.
    CHECK(text::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(text::hex64(0xabcULL) == "0000000000000abc");
    CHECK(text::content_hash({"a", "b"}).size() == 12);
    CHECK(text::content_hash({"a", "b"}) != text::content_hash({"ab"}));
}

TEST_CASE("word helpers") {
    CHECK(text::count_words("  one two\tthree\nfour ") == 4);
    CHECK(text::count_words("") == 0);
    CHECK(text::word_tokens("It's 5pm, Biscuit!") == std::vector<std::string>{"it", "s", "5pm", "biscuit"});
    CHECK(text::is_stopword("the"));
    CHECK_FALSE(text::is_stopword("biscuit"));
    CHECK(text::trim("  x y \n") == "x y");
    CHECK(text::to_lower("AbC") == "abc");
}

TEST_CASE("concept labels") {
    CHECK(text::is_concept_label("lake_trip"));
    CHECK(text::is_concept_label("a_b_c_d_e"));
    CHECK_FALSE(text::is_concept_label("a_b_c_d_e_f"));
    CHECK_FALSE(text::is_concept_label("lake"));
    CHECK_FALSE(text::is_concept_label("Lake_trip"));
    CHECK_FALSE(text::is_concept_label("lake__trip"));
    CHECK_FALSE(text::is_concept_label("_lake_trip"));
    CHECK(text::normalize_concept_label("Lake Trip-Plans") == "lake_trip_plans");
}
