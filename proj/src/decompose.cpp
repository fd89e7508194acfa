#include "genorch/decompose.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "genorch/position.hpp"

namespace genorch {

std::string to_string(EditAction a) {
    switch (a) {
        case EditAction::add: return "add";
        case EditAction::remove: return "remove";
        case EditAction::replace: return "replace";
        case EditAction::edit_attribute: return "edit_attribute";
        case EditAction::move: return "move";
        case EditAction::style: return "style";
        case EditAction::instruction_passthrough: return "instruction_passthrough";
    }
    return "add";
}

EditAction edit_action_from_string(const std::string& s) {
    if (s == "add") return EditAction::add;
    if (s == "remove") return EditAction::remove;
    if (s == "replace") return EditAction::replace;
    if (s == "edit_attribute") return EditAction::edit_attribute;
    if (s == "move") return EditAction::move;
    if (s == "style") return EditAction::style;
    if (s == "instruction_passthrough") return EditAction::instruction_passthrough;
    throw ConfigError("unknown edit action: " + s);
}

void AtomicEdit::validate() const {
    auto need_target = [&](bool yes) {
        if (yes && !target) throw ConfigError(to_string(action) + " edit requires a target");
        if (!yes && target) throw ConfigError(to_string(action) + " edit must not carry a target");
    };
    switch (action) {
        case EditAction::add:
            need_target(false);
            if (category.empty()) throw ConfigError("add edit requires a category");
            break;
        case EditAction::remove:
            need_target(true);
            break;
        case EditAction::replace:
            need_target(true);
            if (category.empty()) throw ConfigError("replace edit requires a new category");
            break;
        case EditAction::edit_attribute:
            need_target(true);
            if (attribute.empty() || value.empty())
                throw ConfigError("edit_attribute requires attribute and value");
            break;
        case EditAction::move:
            need_target(true);
            if (!dest_bbox && placement.empty())
                throw ConfigError("move requires a destination bbox or relation");
            break;
        case EditAction::style:
            if (style.empty()) throw ConfigError("style edit requires a style token");
            break;
        case EditAction::instruction_passthrough:
            if (raw_text.empty()) throw ConfigError("passthrough edit requires text");
            break;
    }
}

namespace {

struct Clause {
    std::string text;
    size_t offset = 0;
};

// Clause text keeps its original case; the grammar lowercases token by
// token so quoted render text survives intact.
std::vector<Clause> split_clauses(const std::string& text, bool split_and_then) {
    std::vector<Clause> out;
    std::string lowered = lowercase(text);
    size_t pos = 0;
    while (pos <= lowered.size()) {
        size_t semi = lowered.find(';', pos);
        size_t andthen = split_and_then ? lowered.find(" and then ", pos) : std::string::npos;
        size_t cut = std::min(semi, andthen);
        size_t end = cut == std::string::npos ? text.size() : cut;
        std::string clause = trim(text.substr(pos, end - pos));
        if (!clause.empty()) out.push_back({clause, pos});
        if (cut == std::string::npos) break;
        pos = cut == semi ? cut + 1 : cut + 10;  // strlen(" and then ")
    }
    return out;
}

// Relation keyword sequences, longest match first. Returns tokens consumed.
std::optional<std::pair<RelationKind, size_t>> match_relation(const std::vector<std::string>& w,
                                                              size_t i) {
    auto at = [&](size_t k) { return i + k < w.size() ? w[i + k] : std::string(); };
    if (at(0) == "to" && at(1) == "the" && (at(2) == "left" || at(2) == "right") && at(3) == "of")
        return {{at(2) == "left" ? RelationKind::left_of : RelationKind::right_of, 4}};
    if ((at(0) == "left" || at(0) == "right") && at(1) == "of")
        return {{at(0) == "left" ? RelationKind::left_of : RelationKind::right_of, 2}};
    if (at(0) == "left_of") return {{RelationKind::left_of, 1}};
    if (at(0) == "right_of") return {{RelationKind::right_of, 1}};
    if (at(0) == "above") return {{RelationKind::above, 1}};
    if (at(0) == "below") return {{RelationKind::below, 1}};
    if (at(0) == "next_to") return {{RelationKind::next_to, 1}};
    if (at(0) == "next" && at(1) == "to") return {{RelationKind::next_to, 2}};
    if (at(0) == "on" && at(1) == "top" && at(2) == "of") return {{RelationKind::on, 3}};
    if (at(0) == "on") return {{RelationKind::on, 1}};
    return std::nullopt;
}

struct Phrase {
    int count = 1;
    AttributeSet attrs;
    std::string category;
};

// [numeral] attr* noun, consuming tokens from i. Leading "the" is allowed.
// require_determiner distinguishes object phrases ("a bird", "two dogs")
// from bare background tokens ("grassland").
std::optional<Phrase> parse_phrase(const Vocab& vocab, const std::vector<std::string>& w,
                                   size_t& i, bool allow_count = true,
                                   bool require_determiner = false) {
    Phrase p;
    bool determined = false;
    if (i < w.size() && w[i] == "the") {
        ++i;
        determined = true;
    }
    if (i < w.size()) {
        if (auto n = parse_numeral(w[i]); n && allow_count) {
            p.count = *n;
            ++i;
            determined = true;
        } else if ((w[i] == "a" || w[i] == "an")) {
            ++i;
            determined = true;
        }
    }
    if (require_determiner && !determined) return std::nullopt;
    while (i < w.size()) {
        auto kind = vocab.attribute_kind(w[i]);
        if (!kind) break;
        p.attrs.set(*kind, w[i]);
        ++i;
    }
    if (i >= w.size() || w[i] == "," || w[i] == "and") return std::nullopt;
    p.category = singularize(w[i]);
    ++i;
    return p;
}

std::optional<BBox> parse_paren_bbox(const std::string& clause) {
    size_t open = clause.find('(');
    size_t close = clause.find(')', open == std::string::npos ? 0 : open);
    if (open == std::string::npos || close == std::string::npos) return std::nullopt;
    std::string body = clause.substr(open + 1, close - open - 1);
    std::replace(body.begin(), body.end(), ',', ' ');
    std::istringstream in(body);
    double v[4];
    for (double& d : v)
        if (!(in >> d)) return std::nullopt;
    BBox b{v[0], v[1], v[2], v[3]};
    return b.valid() ? std::optional<BBox>(b) : std::nullopt;
}

bool looks_structural(const Vocab& vocab, const std::vector<std::string>& w) {
    for (size_t i = 0; i < w.size(); ++i) {
        if (w[i] == "is" || w[i] == "and") return true;
        if (parse_numeral(w[i]) || vocab.attribute_kind(w[i])) return true;
        if (match_relation(w, i)) return true;
    }
    return false;
}

std::string numeral_word(int n, const std::string& noun) {
    static const char* words[] = {"",    "",    "two", "three", "four", "five",
                                  "six", "seven", "eight", "nine", "ten"};
    if (n == 1) {
        static const std::string vowels = "aeiou";
        return vowels.find(noun.empty() ? 'x' : noun[0]) != std::string::npos ? "an" : "a";
    }
    if (n <= 10) return words[n];
    return std::to_string(n);
}

std::string render_attrs(const AttributeSet& a) {
    std::string out;
    for (auto& v : {a.color, a.shape, a.texture})
        if (v) out += *v + " ";
    return out;
}

std::string fmt4(double v) {
    char buf[32];
    snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::string render_selector(const ObjectSelector& sel) {
    return render_attrs(sel.attrs) + sel.category;
}

TaskKind Decomposer::classify_task(const TaskInstruction& instr) const {
    if (instr.kind_hint) return *instr.kind_hint;
    return instr.attachments.source_scene ? TaskKind::editing : TaskKind::generation;
}

SceneSpec Decomposer::decompose_generation(const std::string& prompt) const {
    if (trim(prompt).empty()) throw ParseError("empty prompt", 0);
    SceneSpec spec;
    std::vector<std::pair<std::string, AttributeSet>> order;  // distinct (cat, attrs) groups
    std::map<std::pair<std::string, std::string>, int> counts;
    auto attr_key = [](const AttributeSet& a) {
        return (a.color ? *a.color : "") + "|" + (a.shape ? *a.shape : "") + "|" +
               (a.texture ? *a.texture : "");
    };

    auto clauses = split_clauses(prompt, false);
    bool first = true;
    for (auto& cl : clauses) {
        auto words = split_words(lowercase(cl.text));
        if (first) {
            // Medium preamble: "a photo of ...", "an oil painting of ...".
            for (size_t k = 1; k + 1 < words.size(); ++k) {
                if (words[k + 1] != "of") continue;
                static const std::set<std::string> media = {"photo", "picture", "image",
                                                            "painting", "drawing"};
                if (!media.count(words[k])) break;
                if (words[k] == "photo" || words[k] == "painting" || words[k] == "drawing")
                    spec.background.insert(words[k]);
                words.erase(words.begin(), words.begin() + k + 2);
                break;
            }
            first = false;
        }

        // Relation clause: <phrase> is <relation> <phrase>.
        auto is_pos = std::find(words.begin(), words.end(), "is");
        if (is_pos != words.end()) {
            size_t rel_at = size_t(is_pos - words.begin()) + 1;
            if (auto rel = match_relation(words, rel_at)) {
                size_t i = 0;
                auto subj = parse_phrase(vocab_, words, i, false);
                if (!subj || i != size_t(is_pos - words.begin()))
                    throw ParseError("bad relation subject: " + cl.text, cl.offset);
                size_t j = rel_at + rel->second;
                auto obj = parse_phrase(vocab_, words, j, false);
                if (!obj || j != words.size())
                    throw ParseError("bad relation object: " + cl.text, cl.offset);
                spec.relations.push_back({rel->first,
                                          {subj->category, subj->attrs, std::nullopt},
                                          {obj->category, obj->attrs, std::nullopt}});
                continue;
            }
        }

        // Text-render clause: text "CONTENT".
        if (!words.empty() && words[0] == "text") {
            size_t q1 = cl.text.find('"');
            size_t q2 = q1 == std::string::npos ? std::string::npos : cl.text.find('"', q1 + 1);
            if (q2 != std::string::npos) {
                spec.background.insert("render_text:" + cl.text.substr(q1 + 1, q2 - q1 - 1));
                continue;
            }
        }

        // Object list clause: phrases joined by "and" / ",".
        {
            size_t i = 0;
            std::vector<Phrase> phrases;
            bool ok = !words.empty();
            while (ok && i < words.size()) {
                auto p = parse_phrase(vocab_, words, i, true, true);
                if (!p) {
                    ok = false;
                    break;
                }
                phrases.push_back(*p);
                if (i < words.size()) {
                    if (words[i] == "and" || words[i] == ",") {
                        ++i;
                        if (i < words.size() && words[i] == "and") ++i;  // ", and"
                    } else {
                        ok = false;
                    }
                }
            }
            if (ok && !phrases.empty()) {
                for (auto& p : phrases) {
                    auto key = std::make_pair(p.category, attr_key(p.attrs));
                    if (!counts.count(key)) order.push_back({p.category, p.attrs});
                    counts[key] += p.count;
                }
                continue;
            }
        }

        if (looks_structural(vocab_, words))
            throw ParseError("unparseable clause: " + cl.text, cl.offset);
        spec.background.insert(cl.text);
    }

    for (auto& [cat, attrs] : order)
        spec.required.push_back({cat, attrs, counts[{cat, attr_key(attrs)}]});
    if (spec.required.empty() && spec.relations.empty() && spec.background.empty())
        throw ParseError("prompt decomposed to nothing", 0);

    for (auto& rel : spec.relations) {
        auto resolves = [&](const ObjectSelector& sel) {
            for (auto& e : spec.required)
                if (e.category == sel.category && sel.attrs.satisfied_by(e.attrs)) return true;
            return false;
        };
        if (!resolves(rel.subject) || !resolves(rel.object))
            throw ParseError("relation references an object that is not required", 0);
    }
    return spec;
}

std::optional<AtomicEdit> Decomposer::parse_edit_clause(const std::string& clause) const {
    auto words = split_words(lowercase(clause));
    if (words.empty()) return std::nullopt;
    const std::string& verb = words[0];

    if (verb == "add") {
        size_t i = 1;
        auto p = parse_phrase(vocab_, words, i);
        if (!p || p->count != 1) return std::nullopt;
        AtomicEdit e;
        e.action = EditAction::add;
        e.category = p->category;
        e.attrs = p->attrs;
        if (i < words.size() && words[i] == "at") {
            e.dest_bbox = parse_paren_bbox(clause);
            if (!e.dest_bbox) return std::nullopt;
            return e;
        }
        if (i < words.size()) {
            if (words[i] == "to" && i + 1 < words.size() && words[i + 1] != "the") ++i;
            auto rel = match_relation(words, i);
            if (!rel) return std::nullopt;
            i += rel->second;
            auto ref = parse_phrase(vocab_, words, i, false);
            if (!ref || i != words.size()) return std::nullopt;
            e.placement.push_back({rel->first, {ref->category, ref->attrs, std::nullopt}});
        }
        return e;
    }

    if (verb == "remove" || verb == "delete") {
        size_t i = 1;
        auto p = parse_phrase(vocab_, words, i, false);
        if (!p || i != words.size()) return std::nullopt;
        AtomicEdit e;
        e.action = EditAction::remove;
        e.target = ObjectSelector{p->category, p->attrs, std::nullopt};
        return e;
    }

    if (verb == "replace") {
        auto with = std::find(words.begin(), words.end(), "with");
        if (with == words.end()) return std::nullopt;
        size_t i = 1;
        auto old_p = parse_phrase(vocab_, words, i, false);
        if (!old_p || i != size_t(with - words.begin())) return std::nullopt;
        size_t j = i + 1;
        auto new_p = parse_phrase(vocab_, words, j, false);
        if (!new_p || j != words.size()) return std::nullopt;
        AtomicEdit e;
        e.action = EditAction::replace;
        e.target = ObjectSelector{old_p->category, old_p->attrs, std::nullopt};
        e.category = new_p->category;
        e.attrs = new_p->attrs;
        return e;
    }

    if (verb == "edit" || verb == "change") {
        // edit the <attr> of the <phrase> to <value>
        if (words.size() < 6 || words[1] != "the") return std::nullopt;
        std::string attr = words[2];
        if (attr != "color" && attr != "shape" && attr != "texture") return std::nullopt;
        if (words[3] != "of") return std::nullopt;
        size_t i = 4;
        auto p = parse_phrase(vocab_, words, i, false);
        if (!p || i + 2 != words.size() || words[i] != "to") return std::nullopt;
        std::string value = words[i + 1];
        if (!vocab_.values_for(attr).count(value)) return std::nullopt;
        AtomicEdit e;
        e.action = EditAction::edit_attribute;
        e.target = ObjectSelector{p->category, p->attrs, std::nullopt};
        e.attribute = attr;
        e.value = value;
        return e;
    }

    if (verb == "move") {
        size_t i = 1;
        auto p = parse_phrase(vocab_, words, i, false);
        if (!p) return std::nullopt;
        AtomicEdit e;
        e.action = EditAction::move;
        e.target = ObjectSelector{p->category, p->attrs, std::nullopt};
        if (i < words.size() && words[i] == "to" && i + 1 < words.size() &&
            words[i + 1].front() == '(') {
            e.dest_bbox = parse_paren_bbox(clause);
            return e.dest_bbox ? std::optional<AtomicEdit>(e) : std::nullopt;
        }
        if (i < words.size() && words[i] == "to" && match_relation(words, i + 1)) ++i;
        auto rel = match_relation(words, i);
        if (!rel) return std::nullopt;
        i += rel->second;
        auto ref = parse_phrase(vocab_, words, i, false);
        if (!ref || i != words.size()) return std::nullopt;
        e.placement.push_back({rel->first, {ref->category, ref->attrs, std::nullopt}});
        return e;
    }

    if (verb == "apply" && words.size() >= 3 && words.back() == "style") {
        AtomicEdit e;
        e.action = EditAction::style;
        std::string token;
        for (size_t i = 1; i + 1 < words.size(); ++i) token += (i > 1 ? " " : "") + words[i];
        e.style = token;
        return e;
    }

    return std::nullopt;
}

std::vector<AtomicEdit> Decomposer::decompose_editing(const TaskInstruction& instr) const {
    if (trim(instr.text).empty()) throw ParseError("empty instruction", 0);
    std::vector<AtomicEdit> edits;
    for (auto& cl : split_clauses(instr.text, true)) {
        if (auto e = parse_edit_clause(cl.text)) {
            edits.push_back(*e);
        } else {
            AtomicEdit pass;
            pass.action = EditAction::instruction_passthrough;
            pass.raw_text = cl.text;
            edits.push_back(pass);
        }
    }
    if (edits.empty()) throw ParseError("no clauses found", 0);
    return edits;
}

std::vector<AtomicEdit> Decomposer::discrepancies_to_edits(const DiscrepancyReport& report,
                                                           const SceneSpec& spec,
                                                           const SceneGraph& graph) const {
    std::vector<AtomicEdit> removes, attr_edits, adds, moves;
    Thresholds th;  // geometry defaults; layout callers pass their own

    for (auto& token : report.background_mismatch) {
        AtomicEdit e;
        e.action = EditAction::style;
        e.style = token;
        attr_edits.push_back(e);
    }

    // Correction targets carry the category and the anchoring id only.
    // Attribute snapshots go stale as soon as an earlier correction edits
    // the object; the compensated bounding box disambiguates duplicates.
    for (auto& id : report.extraneous) {
        const SceneObject* obj = graph.find(id);
        if (!obj) continue;
        AtomicEdit e;
        e.action = EditAction::remove;
        e.target = ObjectSelector{obj->category, {}, id};
        removes.push_back(e);
    }

    for (auto& wa : report.wrong_attribute) {
        const SceneObject* obj = graph.find(wa.object_id);
        if (!obj) continue;
        AtomicEdit e;
        e.action = EditAction::edit_attribute;
        e.target = ObjectSelector{obj->category, {}, wa.object_id};
        e.attribute = wa.attribute;
        e.value = wa.wanted;
        attr_edits.push_back(e);
    }

    // Deficit adds per entry, in entry order (re-ordered below when relations
    // are in play).
    std::map<int, int> deficits;
    for (auto& m : report.missing) {
        for (int e = 0; e < int(spec.required.size()); ++e) {
            if (spec.required[e].category == m.category && spec.required[e].attrs == m.attrs) {
                deficits[e] = m.deficit;
                break;
            }
        }
    }

    auto make_add = [&](int entry, std::optional<BBox> dest) {
        AtomicEdit e;
        e.action = EditAction::add;
        e.category = spec.required[entry].category;
        e.attrs = spec.required[entry].attrs;
        e.dest_bbox = dest;
        return e;
    };

    if (spec.relations.empty()) {
        for (auto& [entry, deficit] : deficits)
            for (int k = 0; k < deficit; ++k) adds.push_back(make_add(entry, std::nullopt));
    } else {
        // Relations can break even when currently satisfied: a recolor or
        // an add can grow a selector's match set. Apply removes and
        // attribute edits to a scratch copy, place the adds against it, and
        // demand every relation hold on that virtual end state.
        SceneGraph virt = graph;
        for (auto& e : removes)
            std::erase_if(virt.objects,
                          [&](const SceneObject& o) { return o.id == *e.target->anchor_id; });
        for (auto& e : attr_edits) {
            if (e.action == EditAction::style) {
                virt.background.insert(e.style);
            } else if (e.target && e.target->anchor_id) {
                if (auto* o = virt.find(*e.target->anchor_id)) o->attrs.set(e.attribute, e.value);
            }
        }
        const SceneGraph virt_before_adds = virt;

        auto topo = entry_topo_order(spec);
        bool fast_ok = topo.has_value();
        std::vector<std::pair<int, BBox>> planned;  // (entry, solved bbox)
        if (fast_ok) {
            for (int entry : *topo) {
                auto it = deficits.find(entry);
                if (it == deficits.end()) continue;
                std::vector<PlacementConstraint> cons;
                for (auto& rel : spec.relations) {
                    if (selector_matches_entry(rel.subject, spec.required[entry]))
                        cons.push_back({rel.kind, rel.object, false});
                    if (selector_matches_entry(rel.object, spec.required[entry]))
                        cons.push_back({rel.kind, rel.subject, true});
                }
                for (int k = 0; k < it->second && fast_ok; ++k) {
                    auto solved = solve_constrained_bbox(virt, cons, {0.12, 0.12}, th);
                    if (!solved) {
                        fast_ok = false;
                        break;
                    }
                    SceneObject ghost{virt.fresh_id(), spec.required[entry].category,
                                      spec.required[entry].attrs, *solved};
                    virt.objects.push_back(ghost);
                    planned.push_back({entry, *solved});
                }
                if (!fast_ok) break;
            }
        }
        if (fast_ok) {
            for (auto& rel : spec.relations)
                if (!relation_satisfied(virt, rel, th)) {
                    fast_ok = false;
                    break;
                }
        }

        if (fast_ok) {
            for (auto& [entry, bbox] : planned) adds.push_back(make_add(entry, bbox));
        } else {
            // Re-layout every connected component that contains a violation
            // or a deficit; matched objects move to their layout slots.
            int n = int(spec.required.size());
            std::vector<int> comp(n);
            for (int i = 0; i < n; ++i) comp[i] = i;
            std::function<int(int)> find = [&](int i) {
                return comp[i] == i ? i : comp[i] = find(comp[i]);
            };
            for (auto& rel : spec.relations) {
                std::vector<int> touched;
                for (int i = 0; i < n; ++i)
                    if (selector_matches_entry(rel.subject, spec.required[i]) ||
                        selector_matches_entry(rel.object, spec.required[i]))
                        touched.push_back(i);
                for (size_t k = 1; k < touched.size(); ++k)
                    comp[find(touched[k])] = find(touched[0]);
            }
            std::set<int> dirty;
            for (auto& rel : spec.relations) {
                if (relation_satisfied(virt_before_adds, rel, th)) continue;
                for (int i = 0; i < n; ++i)
                    if (selector_matches_entry(rel.subject, spec.required[i]) ||
                        selector_matches_entry(rel.object, spec.required[i]))
                        dirty.insert(find(i));
            }
            for (auto& [entry, deficit] : deficits) {
                (void)deficit;
                dirty.insert(find(entry));
            }

            std::set<int> relation_entries;
            for (auto& rel : spec.relations)
                for (int i = 0; i < n; ++i)
                    if (selector_matches_entry(rel.subject, spec.required[i]) ||
                        selector_matches_entry(rel.object, spec.required[i]))
                        relation_entries.insert(i);

            for (int root : dirty) {
                SceneSpec sub;
                std::vector<int> members;
                for (int i = 0; i < n; ++i) {
                    if (find(i) == root && relation_entries.count(i)) {
                        members.push_back(i);
                        sub.required.push_back(spec.required[i]);
                    }
                }
                if (members.empty()) continue;
                for (auto& rel : spec.relations) {
                    bool inside = false;
                    for (int m : members)
                        if (selector_matches_entry(rel.subject, spec.required[m])) inside = true;
                    if (inside) sub.relations.push_back(rel);
                }
                std::vector<LayoutPlacement> layout;
                try {
                    layout = generate_layout(sub, th);
                } catch (const PlacementInfeasible&) {
                    // Degrade: plain adds, per-violation single-hint moves.
                    layout.clear();
                }
                if (layout.empty()) {
                    for (int m : members) {
                        auto it = deficits.find(m);
                        int deficit = it == deficits.end() ? 0 : it->second;
                        for (int k = 0; k < deficit; ++k) adds.push_back(make_add(m, std::nullopt));
                    }
                    continue;
                }
                // Matched objects of each member entry, in id order, take the
                // first layout units; leftover units become adds.
                for (size_t sub_e = 0; sub_e < sub.required.size(); ++sub_e) {
                    int entry = members[sub_e];
                    std::vector<std::string> matched_ids;
                    for (auto& [id, slot] : report.assignment)
                        if (slot.first == entry) matched_ids.push_back(id);
                    std::sort(matched_ids.begin(), matched_ids.end());
                    std::vector<BBox> units;
                    for (auto& pl : layout)
                        if (pl.entry_index == int(sub_e)) units.push_back(pl.bbox);
                    for (size_t u = 0; u < units.size(); ++u) {
                        if (u < matched_ids.size()) {
                            const SceneObject* obj = graph.find(matched_ids[u]);
                            AtomicEdit e;
                            e.action = EditAction::move;
                            e.target = ObjectSelector{obj->category, {}, obj->id};
                            e.dest_bbox = units[u];
                            moves.push_back(e);
                        } else {
                            adds.push_back(make_add(entry, units[u]));
                        }
                    }
                }
            }
            // Deficits in clean components still need plain adds.
            for (auto& [entry, deficit] : deficits) {
                if (dirty.count(find(entry)) && relation_entries.count(entry)) continue;
                for (int k = 0; k < deficit; ++k) adds.push_back(make_add(entry, std::nullopt));
            }
        }
    }

    std::vector<AtomicEdit> out;
    for (auto* group : {&removes, &attr_edits, &adds, &moves})
        out.insert(out.end(), group->begin(), group->end());
    return out;
}

std::string Decomposer::render_edit(const AtomicEdit& edit) const {
    switch (edit.action) {
        case EditAction::add: {
            std::string s = "add " + numeral_word(1, render_attrs(edit.attrs).empty()
                                                         ? edit.category
                                                         : render_attrs(edit.attrs)) +
                            " " + render_attrs(edit.attrs) + edit.category;
            if (edit.dest_bbox) {
                s += " at (" + fmt4(edit.dest_bbox->x) + ", " + fmt4(edit.dest_bbox->y) + ", " +
                     fmt4(edit.dest_bbox->w) + ", " + fmt4(edit.dest_bbox->h) + ")";
            } else if (edit.placement.size() == 1 && !edit.placement[0].ref.anchor_id) {
                s += " " + to_string(edit.placement[0].kind) + " the " +
                     render_selector(edit.placement[0].ref);
            }
            return s;
        }
        case EditAction::remove:
            return "remove the " + render_selector(*edit.target);
        case EditAction::replace:
            return "replace the " + render_selector(*edit.target) + " with " +
                   numeral_word(1, render_attrs(edit.attrs).empty() ? edit.category
                                                                    : render_attrs(edit.attrs)) +
                   " " + render_attrs(edit.attrs) + edit.category;
        case EditAction::edit_attribute:
            return "edit the " + edit.attribute + " of the " + render_selector(*edit.target) +
                   " to " + edit.value;
        case EditAction::move: {
            std::string s = "move the " + render_selector(*edit.target);
            if (edit.dest_bbox) {
                s += " to (" + fmt4(edit.dest_bbox->x) + ", " + fmt4(edit.dest_bbox->y) + ", " +
                     fmt4(edit.dest_bbox->w) + ", " + fmt4(edit.dest_bbox->h) + ")";
            } else if (!edit.placement.empty()) {
                s += " " + to_string(edit.placement[0].kind) + " the " +
                     render_selector(edit.placement[0].ref);
            }
            return s;
        }
        case EditAction::style:
            return "apply " + edit.style + " style";
        case EditAction::instruction_passthrough:
            return edit.raw_text;
    }
    return "";
}

std::string Decomposer::render_spec(const SceneSpec& spec) const {
    std::vector<std::string> clauses;
    std::string objects;
    for (size_t i = 0; i < spec.required.size(); ++i) {
        auto& e = spec.required[i];
        std::string phrase = render_attrs(e.attrs) + e.category;
        std::string lead = e.count == 1 ? numeral_word(1, phrase) : numeral_word(e.count, phrase);
        if (!objects.empty()) objects += " and ";
        objects += lead + " " + phrase;
    }
    if (!objects.empty()) clauses.push_back(objects);
    for (auto& rel : spec.relations)
        clauses.push_back("the " + render_selector(rel.subject) + " is " + to_string(rel.kind) +
                          " the " + render_selector(rel.object));
    for (auto& token : spec.background) {
        if (token.rfind("render_text:", 0) == 0)
            clauses.push_back("text \"" + token.substr(12) + "\"");
        else
            clauses.push_back(token);
    }
    std::string out;
    for (size_t i = 0; i < clauses.size(); ++i) out += (i ? "; " : "") + clauses[i];
    return out;
}

}  // namespace genorch
