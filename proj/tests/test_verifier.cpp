#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "genorch/decompose.hpp"
#include "genorch/verify.hpp"
#include "support/oracles.hpp"

using namespace genorch;
using namespace genorch::testing;

namespace {

OracleVerifier verifier;
Decomposer dec;

SceneObject obj(const std::string& id, const std::string& cat, BBox b,
                std::optional<std::string> color = std::nullopt) {
    SceneObject o;
    o.id = id;
    o.category = cat;
    o.bbox = b;
    o.attrs.color = color;
    return o;
}

AtomicEdit edit_of(const std::string& text) {
    auto edits = dec.decompose_editing({text, TaskKind::editing, {}});
    REQUIRE(edits.size() == 1);
    return edits[0];
}

}  // namespace

TEST_CASE("verify_spec: pass iff diff empty") {
    SceneSpec spec;
    spec.required = {{"cat", {}, 1}};
    SceneGraph g;
    g.objects.push_back(obj("o1", "cat", {0.2, 0.2, 0.2, 0.2}));

    Verdict v = verifier.verify_spec(g, spec);
    CHECK(v.pass);
    CHECK(v.score == doctest::Approx(1.0));
    CHECK(v.report.empty());
    for (auto& [aspect, ok] : v.aspects) CHECK(ok);

    // the worked pre-correction state: red scooter only
    SceneSpec target;
    target.required = {{"bicycle", {}, 1}, {"scooter", {}, 1}, {"bird", {}, 1}};
    target.required[0].attrs.color = "black";
    target.required[1].attrs.color = "blue";
    SceneGraph bad;
    bad.objects.push_back(obj("x", "scooter", {0.4, 0.4, 0.2, 0.2}, "red"));
    Verdict fail = verifier.verify_spec(bad, target);
    CHECK_FALSE(fail.pass);
    CHECK(fail.report.missing.size() == 2);
    CHECK(fail.report.wrong_attribute.size() == 1);
    CHECK_FALSE(fail.aspects["objects"]);
    CHECK_FALSE(fail.aspects["attributes"]);
    CHECK(fail.aspects["aesthetics"]);  // unjudged in oracle mode
}

TEST_CASE("verify_spec agrees with brute force on 200+ random pairs") {
    int cases = 0;
    for (uint64_t seed = 0; seed < 250; ++seed) {
        FixtureGen fx(seed, "verify-brute");
        SceneGraph g = fx.graph(4);
        SceneSpec spec;
        int n = int(fx.rng.next_below(3));
        for (int e = 0; e < n; ++e) {
            RequiredEntry entry{fx.nouns[fx.rng.next_below(3)], {}, 1 + int(fx.rng.next_below(2))};
            if (fx.rng.next_u01() < 0.6)
                entry.attrs.color = fx.colors[fx.rng.next_below(fx.colors.size())];
            spec.required.push_back(entry);
        }
        Verdict v = verifier.verify_spec(g, spec);
        auto brute = brute_force_spec_score(g, spec);
        CHECK(v.pass == (brute.satisfied == brute.total));
        CHECK(v.score == doctest::Approx(brute.score()));
        ++cases;
    }
    CHECK(cases >= 200);
}

TEST_CASE("verify_edit: perfect add passes") {
    SceneGraph before;
    before.objects.push_back(obj("o1", "cat", {0.1, 0.1, 0.2, 0.2}));
    SceneGraph after = before;
    after.objects.push_back(obj("o2", "bird", {0.6, 0.2, 0.15, 0.15}));

    Verdict v = verifier.verify_edit(before, after, edit_of("add a bird"));
    CHECK(v.pass);
    CHECK(v.score == doctest::Approx(1.0));

    // no-op add fails on the objects aspect
    Verdict nop = verifier.verify_edit(before, before, edit_of("add a bird"));
    CHECK_FALSE(nop.pass);
    CHECK_FALSE(nop.aspects["objects"]);
}

TEST_CASE("verify_edit: too-small replacement fails the positions aspect") {
    SceneGraph before;
    before.objects.push_back(obj("s1", "sheep", {0.1, 0.4, 0.15, 0.15}, "black"));
    before.objects.push_back(obj("s2", "sheep", {0.4, 0.4, 0.15, 0.15}, "white"));

    // replacement lands in place but shrunk to area 0.00225 < 0.005
    SceneGraph after;
    after.objects.push_back(obj("s2", "sheep", {0.4, 0.4, 0.15, 0.15}, "white"));
    after.objects.push_back(obj("s3", "sheep", {0.1, 0.4, 0.047, 0.047}, "white"));

    Verdict v =
        verifier.verify_edit(before, after, edit_of("replace the black sheep with a white sheep"));
    CHECK_FALSE(v.pass);
    CHECK_FALSE(v.aspects["positions"]);
    CHECK(v.aspects["attributes"]);
}

TEST_CASE("verify_edit: attribute edit accepts in-place and replacement realizations") {
    SceneGraph before;
    before.objects.push_back(obj("s1", "sheep", {0.1, 0.4, 0.15, 0.15}, "black"));
    AtomicEdit edit = edit_of("edit the color of the black sheep to white");

    SceneGraph in_place = before;
    in_place.objects[0].attrs.color = "white";
    CHECK(verifier.verify_edit(before, in_place, edit).pass);

    SceneGraph swapped;
    swapped.objects.push_back(obj("s9", "sheep", {0.1, 0.4, 0.15, 0.15}, "white"));
    CHECK(verifier.verify_edit(before, swapped, edit).pass);

    // unchanged attribute fails
    CHECK_FALSE(verifier.verify_edit(before, before, edit).pass);
    // replacement that drifted across the canvas fails on positions
    SceneGraph drifted;
    drifted.objects.push_back(obj("s9", "sheep", {0.7, 0.1, 0.15, 0.15}, "white"));
    Verdict v = verifier.verify_edit(before, drifted, edit);
    CHECK_FALSE(v.pass);
    CHECK_FALSE(v.aspects["positions"]);
}

TEST_CASE("verify_edit: collateral mutation of a bystander fails objects") {
    SceneGraph before;
    before.objects.push_back(obj("t", "cat", {0.1, 0.1, 0.2, 0.2}, "black"));
    before.objects.push_back(obj("b", "dog", {0.6, 0.6, 0.2, 0.2}, "brown"));

    AtomicEdit edit = edit_of("edit the color of the cat to white");
    SceneGraph after = before;
    after.objects[0].attrs.color = "white";
    after.objects[1].bbox.x += 0.1;  // scripted collateral damage

    Verdict v = verifier.verify_edit(before, after, edit);
    CHECK_FALSE(v.pass);
    CHECK_FALSE(v.aspects["objects"]);

    after.objects[1].bbox.x -= 0.1;
    CHECK(verifier.verify_edit(before, after, edit).pass);

    // bystander drift within tolerance is fine
    after.objects[1].bbox.x += 0.01;
    CHECK(verifier.verify_edit(before, after, edit).pass);
}

TEST_CASE("verify_edit: remove, move, style postconditions") {
    SceneGraph before;
    before.objects.push_back(obj("a", "cat", {0.1, 0.1, 0.2, 0.2}));
    before.objects.push_back(obj("b", "dog", {0.6, 0.6, 0.2, 0.2}));

    SUBCASE("remove") {
        SceneGraph after;
        after.objects.push_back(before.objects[1]);
        CHECK(verifier.verify_edit(before, after, edit_of("remove the cat")).pass);
        CHECK_FALSE(verifier.verify_edit(before, before, edit_of("remove the cat")).pass);
    }
    SUBCASE("move with a relation destination") {
        AtomicEdit mv = edit_of("move the cat right_of the dog");
        SceneGraph after = before;
        after.objects[0].bbox = {0.85, 0.6, 0.1, 0.2};
        CHECK(verifier.verify_edit(before, after, mv).pass);
        SceneGraph wrong_side = before;
        wrong_side.objects[0].bbox = {0.05, 0.6, 0.1, 0.2};
        Verdict v = verifier.verify_edit(before, wrong_side, mv);
        CHECK_FALSE(v.pass);
        CHECK_FALSE(v.aspects["relations"]);
    }
    SUBCASE("style") {
        AtomicEdit st = edit_of("apply impressionist style");
        SceneGraph after = before;
        after.background.insert("impressionist");
        CHECK(verifier.verify_edit(before, after, st).pass);
        Verdict v = verifier.verify_edit(before, before, st);
        CHECK_FALSE(v.pass);
        CHECK_FALSE(v.aspects["background"]);
    }
    SUBCASE("passthrough is locally unjudgeable and passes") {
        AtomicEdit pt = edit_of("make it dramatic");
        CHECK(verifier.verify_edit(before, before, pt).pass);
    }
}

TEST_CASE("property: verify_edit symmetric in bystander permutation") {
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        FixtureGen fx(seed, "bystander-sym");
        SceneGraph before = fx.graph(4);
        SceneObject target = obj("target", "sheep", {0.3, 0.3, 0.15, 0.15}, "black");
        before.objects.push_back(target);

        AtomicEdit edit = edit_of("edit the color of the black sheep to white");
        SceneGraph after = before;
        after.find("target")->attrs.color = "white";
        bool collateral = fx.rng.next_u01() < 0.4;
        if (collateral && after.objects.size() > 1) after.objects[0].bbox.y += 0.1;

        Verdict base = verifier.verify_edit(before, after, edit);

        SceneGraph before_p = before;
        SceneGraph after_p = after;
        std::reverse(before_p.objects.begin(), before_p.objects.end());
        std::reverse(after_p.objects.begin(), after_p.objects.end());
        Verdict permuted = verifier.verify_edit(before_p, after_p, edit);
        CHECK(base.pass == permuted.pass);
    }
}

TEST_CASE("property: verdicts are monotone in tolerance") {
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        FixtureGen fx(seed, "monotone");
        SceneGraph before;
        before.objects.push_back(obj("t", "cat", {0.3, 0.3, 0.2, 0.2}, "black"));
        before.objects.push_back(obj("b", "dog", {0.7, 0.7, 0.15, 0.15}));

        SceneGraph after = before;
        after.objects[0].attrs.color = "white";
        // bystander drift of random magnitude
        after.objects[1].bbox.x =
            std::min(0.84, after.objects[1].bbox.x + 0.05 * fx.rng.next_u01());

        AtomicEdit edit = edit_of("edit the color of the black cat to white");

        Thresholds tight;
        tight.bbox_drift_tolerance = 0.01;
        Thresholds loose;
        loose.bbox_drift_tolerance = 0.08;
        OracleVerifier tight_v(tight), loose_v(loose);
        bool tight_pass = tight_v.verify_edit(before, after, edit).pass;
        bool loose_pass = loose_v.verify_edit(before, after, edit).pass;
        if (tight_pass) CHECK(loose_pass);
    }
}
