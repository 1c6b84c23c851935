#include <catch2/catch_amalgamated.hpp>

#include "sspo/rng.hpp"
#include "sspo/taskgen.hpp"
#include "sspo/trace.hpp"

using namespace sspo;

namespace {

const Vocabulary& vocab() {
    static const Vocabulary v = Vocabulary::chain_arith();
    return v;
}

std::vector<TokenId> toks(std::initializer_list<const char*> symbols) {
    std::vector<TokenId> out;
    for (const char* s : symbols) out.push_back(vocab().require(s));
    return out;
}

Query query_342() {
    Query q;
    q.kind = TaskKind::chain_arith;
    q.tokens = toks({"3", "+", "4", "-", "2", "="});
    q.gt_answer = toks({"5"});
    q.reference_steps = {toks({"7"}), toks({"5"})};
    return q;
}

Trace segment(const Query& q, const std::vector<TokenId>& resp, bool truncated = false) {
    return segment_response(vocab(), q, resp, std::vector<double>(resp.size(), -1.0), truncated);
}

}  // namespace

TEST_CASE("segment_response walks delimiters") {
    const Query q = query_342();
    const Trace t = segment(q, toks({"7", "S", "5", "S", "A", "5", "."}));
    REQUIRE(t.num_steps() == 2);
    REQUIRE(t.step_spans[0].begin == 0);
    REQUIRE(t.step_spans[0].end == 1);
    REQUIRE(t.step_spans[1].begin == 2);
    REQUIRE(t.step_spans[1].end == 3);
    REQUIRE(t.concl_index == 4);
    REQUIRE(t.answer_tokens() == toks({"5"}));
    REQUIRE(t.reward == 1);
    REQUIRE(t.has_eos);
    REQUIRE(t.trailing_sep);
}

TEST_CASE("segment_response handles the direct-answer form") {
    const Trace t = segment(query_342(), toks({"A", "5", "."}));
    REQUIRE(t.num_steps() == 0);
    REQUIRE(t.concl_index == 0);
    REQUIRE(t.answer_tokens() == toks({"5"}));
    REQUIRE(t.reward == 1);
}

TEST_CASE("segment_response drops empty steps and verifies the answer") {
    const Trace t = segment(query_342(), toks({"7", "S", "S", "A", "4", "."}));
    REQUIRE(t.num_steps() == 1);
    REQUIRE(t.step_spans[0].begin == 0);
    REQUIRE(t.step_spans[0].end == 1);
    REQUIRE(t.answer_tokens() == toks({"4"}));
    REQUIRE(t.reward == 0);
}

TEST_CASE("segment_response flags a missing conclusion") {
    const Trace t = segment(query_342(), toks({"7", "S", "5"}));
    REQUIRE(t.malformed());
    REQUIRE(t.num_steps() == 2);
    REQUIRE(t.answer_span.size() == 0);
    REQUIRE(t.reward == 0);
}

TEST_CASE("a truncated rollout carries reward zero") {
    const Trace t = segment(query_342(), toks({"A", "5"}), /*truncated=*/true);
    REQUIRE(t.truncated);
    REQUIRE(t.answer_tokens() == toks({"5"}));
    REQUIRE(t.reward == 0);
}

TEST_CASE("probe prefixes") {
    const Query q = query_342();
    const Trace t = segment(q, toks({"7", "S", "5", "S", "A", "5", "."}));

    REQUIRE(assemble_probe_prefix(vocab(), t, 0) == toks({"3", "+", "4", "-", "2", "=", "A"}));
    REQUIRE(assemble_probe_prefix(vocab(), t, 1) ==
            toks({"3", "+", "4", "-", "2", "=", "7", "S", "A"}));
    REQUIRE(assemble_probe_prefix(vocab(), t, 2) ==
            toks({"3", "+", "4", "-", "2", "=", "7", "S", "5", "S", "A"}));
    REQUIRE_THROWS_AS(assemble_probe_prefix(vocab(), t, 3), std::out_of_range);
    REQUIRE_THROWS_AS(assemble_probe_prefix(vocab(), t, -1), std::out_of_range);

    REQUIRE(assemble_probe_prefix(vocab(), q) == toks({"3", "+", "4", "-", "2", "=", "A"}));
}

TEST_CASE("probe prefixes are nested") {
    const Query q = query_342();
    const Trace t = segment(q, toks({"7", "S", "5", "S", "A", "5", "."}));
    for (int step = 0; step < t.num_steps(); ++step) {
        auto shorter = assemble_probe_prefix(vocab(), t, step);
        auto longer = assemble_probe_prefix(vocab(), t, step + 1);
        shorter.pop_back();  // strip trailing CONCL
        REQUIRE(shorter.size() < longer.size());
        REQUIRE(std::equal(shorter.begin(), shorter.end(), longer.begin()));
    }
}

TEST_CASE("round trip reconstructs well-formed responses") {
    const Query q = query_342();
    // Random well-formed responses over the step grammar, with and without a
    // trailing delimiter before the conclusion.
    Rng rng(13);
    const std::vector<const char*> digits = {"0", "1", "2", "5", "7", "9"};
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<TokenId> resp;
        const int steps = rng.uniform_int(0, 4);
        for (int s = 0; s < steps; ++s) {
            if (s != 0) resp.push_back(vocab().step_sep());
            const int len = rng.uniform_int(1, 3);
            for (int i = 0; i < len; ++i) {
                resp.push_back(vocab().require(digits[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<int>(digits.size()) - 1))]));
            }
        }
        if (steps > 0 && rng.uniform_int(0, 1) == 1) resp.push_back(vocab().step_sep());
        resp.push_back(vocab().concl());
        const int answer_len = rng.uniform_int(0, 2);
        for (int i = 0; i < answer_len; ++i) {
            resp.push_back(vocab().require(digits[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(digits.size()) - 1))]));
        }
        if (rng.uniform_int(0, 1) == 1) resp.push_back(vocab().eos());

        const Trace t = segment(q, resp);
        REQUIRE(reconstruct_response(vocab(), t) == resp);
    }
}

TEST_CASE("segmentation is deterministic") {
    const Query q = query_342();
    const auto resp = toks({"7", "S", "5", "S", "A", "5", "."});
    const Trace a = segment(q, resp);
    const Trace b = segment(q, resp);
    REQUIRE(a.step_spans.size() == b.step_spans.size());
    REQUIRE(a.concl_index == b.concl_index);
    REQUIRE(a.reward == b.reward);
}

TEST_CASE("action cuts partition the response") {
    const Query q = query_342();
    const Trace t = segment(q, toks({"7", "S", "5", "S", "A", "5", "."}));
    const auto cuts = action_cuts(t);
    REQUIRE(cuts == std::vector<int>{0, 2, 4, 7});

    const Trace direct = segment(q, toks({"A", "5", "."}));
    REQUIRE(action_cuts(direct) == std::vector<int>{0, 3});

    const Trace stray = segment(q, toks({"7", "S", "S", "A", "4", "."}));
    REQUIRE(action_cuts(stray) == std::vector<int>{0, 3, 6});
}

TEST_CASE("trace JSONL round trip") {
    const Query q = query_342();
    std::vector<double> lps = {-0.5, -1.0, -1.5, -2.0, -0.1, -0.2,
                               -std::numeric_limits<double>::infinity()};
    const Trace t =
        segment_response(vocab(), q, toks({"7", "S", "5", "S", "A", "5", "."}), lps, false);
    int qi = -1, rj = -1;
    const Trace back = trace_from_json(trace_to_json(t, 3, 7), &qi, &rj);
    REQUIRE(qi == 3);
    REQUIRE(rj == 7);
    REQUIRE(back.query_tokens == t.query_tokens);
    REQUIRE(back.response_tokens == t.response_tokens);
    REQUIRE(back.gt_answer == t.gt_answer);
    REQUIRE(back.concl_index == t.concl_index);
    REQUIRE(back.answer_span.begin == t.answer_span.begin);
    REQUIRE(back.answer_span.end == t.answer_span.end);
    REQUIRE(back.reward == t.reward);
    REQUIRE(back.token_logprobs.size() == t.token_logprobs.size());
    for (std::size_t i = 0; i + 1 < lps.size(); ++i) REQUIRE(back.token_logprobs[i] == lps[i]);
    REQUIRE(std::isinf(back.token_logprobs.back()));
}
