"""Bracketed constituency trees and syntax-derived features.

Trees are produced by external tooling and supplied as ``.trees`` files
(one bracketed tree per participant utterance, blank line = no parse).
This module parses them and computes the 225 syntax features: a 36-measure
complexity block, 104 production-rule proportions, 13 phrasal-type ratios,
53 Penn POS proportions, 18 universal POS proportions and 1 tense-switch
cohesion measure.  The production-rule inventory and the composition of
the reconstruction blocks are documented in ``data/production_rules.txt``.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional

PAST_TAGS = {"VBD", "VBN"}
PRESENT_TAGS = {"VBP", "VBZ", "VBG"}
FINITE_TAGS = {"VBD", "VBP", "VBZ", "MD"}
CLAUSE_LABELS = {"S", "SINV", "SQ"}
PHRASE_COORD_LABELS = {"ADJP", "ADVP", "NP", "VP"}


class TreeParseError(ValueError):
    """Malformed bracketing; carries the character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


class DegenerateInputError(ValueError):
    """Tree input carries no preterminals to extract features from."""


@dataclass(frozen=True)
class ParseTree:
    label: str
    children: tuple["ParseTree", ...] = ()
    leaf: Optional[str] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def is_preterminal(self) -> bool:
        return len(self.children) == 1 and self.children[0].is_leaf

    def depth(self) -> int:
        """Leaf depth 0, preterminal depth 1, parent = max child depth + 1."""
        if self.is_leaf:
            return 0
        return 1 + max(c.depth() for c in self.children)

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.leaf]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def preterminals(self) -> list["ParseTree"]:
        if self.is_preterminal:
            return [self]
        out = []
        for c in self.children:
            if not c.is_leaf:
                out.extend(c.preterminals())
        return out

    def pos_pairs(self) -> list[tuple[str, str]]:
        """(word, tag) pairs in leaf order."""
        return [(p.children[0].leaf, p.label) for p in self.preterminals()]

    def subtrees(self) -> Iterable["ParseTree"]:
        yield self
        for c in self.children:
            if not c.is_leaf:
                yield from c.subtrees()


def parse_bracketed(text: str) -> ParseTree:
    """Parse one Penn-style bracketed tree.

    A label-less outer wrapper ``( (S ...) )`` is unwrapped.  Unbalanced
    brackets and empty nodes raise TreeParseError with a character offset.
    """
    pos = 0
    n = len(text)

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def read_atom() -> str:
        nonlocal pos
        start = pos
        while pos < n and not text[pos].isspace() and text[pos] not in "()":
            pos += 1
        return text[start:pos]

    def read_node() -> ParseTree:
        nonlocal pos
        if text[pos] != "(":
            raise TreeParseError("expected '('", pos)
        open_at = pos
        pos += 1
        skip_ws()
        label = read_atom()
        children: list[ParseTree] = []
        while True:
            skip_ws()
            if pos >= n:
                raise TreeParseError("unbalanced bracket", open_at)
            if text[pos] == ")":
                pos += 1
                break
            if text[pos] == "(":
                children.append(read_node())
            else:
                word = read_atom()
                children.append(ParseTree(label=word, leaf=word))
        if not children:
            raise TreeParseError(f"empty node {label!r}", open_at)
        return ParseTree(label=label, children=tuple(children))

    skip_ws()
    if pos >= n:
        raise TreeParseError("empty input", 0)
    tree = read_node()
    skip_ws()
    if pos != n:
        raise TreeParseError("trailing material after tree", pos)
    if tree.label == "" and len(tree.children) == 1:
        tree = tree.children[0]
    return tree


def print_tree(tree: ParseTree) -> str:
    if tree.is_leaf:
        return tree.leaf
    inner = " ".join(print_tree(c) for c in tree.children)
    return f"({tree.label} {inner})"


def read_trees_file(text: str) -> list[Optional[ParseTree]]:
    """One tree per line; a blank line means that utterance has no parse."""
    out: list[Optional[ParseTree]] = []
    for line in text.splitlines():
        if not line.strip():
            out.append(None)
        else:
            out.append(parse_bracketed(line))
    return out


# ---------------------------------------------------------------------------
# Registry

# Tags whose literal form would poison CSV headers and downstream parsers.
_TAG_ALIASES = {",": "COMMA", "``": "LQUOTE", "''": "RQUOTE"}


def safe_tag(tag: str) -> str:
    return _TAG_ALIASES.get(tag, tag)


@dataclass(frozen=True)
class ProductionRegistry:
    rules: tuple[tuple[str, tuple[str, ...]], ...]   # 104 (lhs, rhs) signatures
    pos_tags: tuple[str, ...]                        # 53 Penn tags
    upos_targets: tuple[str, ...]                    # 18 universal targets
    upos_map: dict[str, str]

    def __post_init__(self):
        if len(self.rules) != 104:
            raise ValueError(f"expected 104 production rules, got {len(self.rules)}")
        if len(self.pos_tags) != 53:
            raise ValueError(f"expected 53 POS tags, got {len(self.pos_tags)}")
        if len(self.upos_targets) != 18:
            raise ValueError(f"expected 18 universal targets, got {len(self.upos_targets)}")

    @staticmethod
    def rule_name(lhs: str, rhs: tuple[str, ...]) -> str:
        return f"rule_{lhs}->{'_'.join(safe_tag(t) for t in rhs)}"


def _data_text(name: str) -> str:
    return resources.files("cogspeech.data").joinpath(name).read_text(encoding="utf-8")


def load_registry(rules_text: Optional[str] = None,
                  pos_text: Optional[str] = None,
                  upos_text: Optional[str] = None) -> ProductionRegistry:
    """Load the shipped registry files (or supplied override texts)."""
    rules_text = rules_text if rules_text is not None else _data_text("production_rules.txt")
    pos_text = pos_text if pos_text is not None else _data_text("pos_tags.txt")
    upos_text = upos_text if upos_text is not None else _data_text("universal_map.tsv")

    rules = []
    for line in rules_text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        lhs, rhs = line.split(" -> ")
        rules.append((lhs.strip(), tuple(rhs.split())))

    # "# " starts a comment; a bare "#" line is the Penn '#' tag itself.
    tags = [l.strip() for l in pos_text.splitlines()
            if l.strip() and not l.startswith("# ")]

    targets: list[str] = []
    upos_map: dict[str, str] = {}
    for line in upos_text.splitlines():
        if line.startswith("#targets:"):
            targets = line.split(":", 1)[1].split()
        elif line.strip() and not line.startswith("#"):
            src, dst = line.split("\t")
            upos_map[src.strip()] = dst.strip()
    unknown = set(upos_map.values()) - set(targets)
    if unknown:
        raise ValueError(f"universal map targets not declared: {sorted(unknown)}")
    return ProductionRegistry(tuple(rules), tuple(tags), tuple(targets), upos_map)


# ---------------------------------------------------------------------------
# Feature computation

def productions(tree: ParseTree) -> list[tuple[str, tuple[str, ...]]]:
    """All non-lexical expansions LHS -> child labels (preterminals excluded)."""
    out = []
    for node in tree.subtrees():
        if node.is_preterminal or node.is_leaf:
            continue
        out.append((node.label, tuple(c.label for c in node.children)))
    return out


def _is_word_tag(tag: str) -> bool:
    return any(c.isalpha() for c in tag)


def _word_count(tree: ParseTree) -> int:
    return sum(1 for _, tag in tree.pos_pairs() if _is_word_tag(tag))


def _is_clause(node: ParseTree) -> bool:
    if node.label not in CLAUSE_LABELS:
        return False
    for c in node.children:
        if c.label == "VP":
            return True
        if c.is_preterminal and c.label in FINITE_TAGS:
            return True
    return False


def _count_units(trees: list[ParseTree]) -> dict[str, int]:
    """Production-unit counts over all trees (detectors documented in the
    registry file header)."""
    counts = dict(words=0, sentences=len(trees), verbphrases=0, clauses=0,
                  tunits=0, depclauses=0, complex_tunits=0, coordphrases=0,
                  complexnominals=0)

    def walk(node: ParseTree, clause_ancestor: bool):
        if node.is_leaf or node.is_preterminal:
            return
        label = node.label
        clause = _is_clause(node)
        if label == "VP":
            counts["verbphrases"] += 1
        if clause:
            counts["clauses"] += 1
            if not clause_ancestor:
                counts["tunits"] += 1
                if any(sub.label == "SBAR" for sub in node.subtrees() if sub is not node):
                    counts["complex_tunits"] += 1
        if label == "SBAR":
            counts["depclauses"] += 1
        if label in PHRASE_COORD_LABELS and any(
                c.is_preterminal and c.label == "CC" for c in node.children):
            counts["coordphrases"] += 1
        if label == "NP":
            dominated = {sub.label for sub in node.subtrees() if sub is not node
                         and not sub.is_leaf and not sub.is_preterminal}
            if dominated & {"PP", "SBAR", "VP"} or len(node.children) >= 3:
                counts["complexnominals"] += 1
        for c in node.children:
            walk(c, clause_ancestor or clause)

    for tree in trees:
        counts["words"] += _word_count(tree)
        walk(tree, False)
    return counts


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den else None


def _utterance_tense(tree: ParseTree) -> Optional[str]:
    """Tense of the first verb preterminal: past (VBD/VBN) or present
    (VBP/VBZ/VBG); None when the utterance has no tensed verb."""
    for _, tag in tree.pos_pairs():
        if tag in PAST_TAGS:
            return "past"
        if tag in PRESENT_TAGS:
            return "present"
    return None


def syntax_features(trees: list[Optional[ParseTree]],
                    registry: ProductionRegistry) -> dict[str, Optional[float]]:
    """All 225 syntax features for one transcript.

    ``trees`` is aligned with participant utterances; None entries
    (utterances with no parse) contribute nothing.  Raises
    DegenerateInputError when no tree carries a preterminal.
    """
    parsed = [t for t in trees if t is not None]
    if not parsed or all(not t.preterminals() for t in parsed):
        raise DegenerateInputError("no parsed utterances with preterminals")

    feats: dict[str, Optional[float]] = {}

    # Complexity block (36)
    u = _count_units(parsed)
    w, s = u["words"], u["sentences"]
    t_, c = u["tunits"], u["clauses"]
    feats["comp_mean_len_sentence"] = _ratio(w, s)
    feats["comp_mean_len_tunit"] = _ratio(w, t_)
    feats["comp_mean_len_clause"] = _ratio(w, c)
    feats["comp_clauses_per_sentence"] = _ratio(c, s)
    feats["comp_vp_per_tunit"] = _ratio(u["verbphrases"], t_)
    feats["comp_clauses_per_tunit"] = _ratio(c, t_)
    feats["comp_depclause_per_clause"] = _ratio(u["depclauses"], c)
    feats["comp_depclause_per_tunit"] = _ratio(u["depclauses"], t_)
    feats["comp_tunit_per_sentence"] = _ratio(t_, s)
    feats["comp_complex_tunit_ratio"] = _ratio(u["complex_tunits"], t_)
    feats["comp_coordphrase_per_tunit"] = _ratio(u["coordphrases"], t_)
    feats["comp_coordphrase_per_clause"] = _ratio(u["coordphrases"], c)
    feats["comp_complexnominal_per_tunit"] = _ratio(u["complexnominals"], t_)
    feats["comp_complexnominal_per_clause"] = _ratio(u["complexnominals"], c)
    for key, count in (("words", w), ("sentences", s),
                       ("verbphrases", u["verbphrases"]), ("clauses", c),
                       ("tunits", t_), ("depclauses", u["depclauses"]),
                       ("complex_tunits", u["complex_tunits"]),
                       ("coordphrases", u["coordphrases"]),
                       ("complexnominals", u["complexnominals"])):
        feats[f"comp_n_{key}"] = float(count)
    lengths = [_word_count(t) for t in parsed]
    feats["comp_utt_len_max"] = float(max(lengths))
    feats["comp_utt_len_min"] = float(min(lengths))
    feats["comp_utt_len_mean"] = sum(lengths) / len(lengths)
    depths = [t.depth() for t in parsed]
    feats["comp_tree_depth_max"] = float(max(depths))
    feats["comp_tree_depth_mean"] = sum(depths) / len(depths)
    for key in ("sentences", "verbphrases", "clauses", "tunits", "depclauses",
                "complex_tunits", "coordphrases", "complexnominals"):
        feats[f"comp_{key}_per_word"] = _ratio(u[key], w)

    # Production-rule proportions (104)
    all_prods: list[tuple[str, tuple[str, ...]]] = []
    for tree in parsed:
        all_prods.extend(productions(tree))
    total_prods = len(all_prods)
    rule_counts: dict[tuple[str, tuple[str, ...]], int] = {}
    for prod in all_prods:
        rule_counts[prod] = rule_counts.get(prod, 0) + 1
    for lhs, rhs in registry.rules:
        name = ProductionRegistry.rule_name(lhs, rhs)
        feats[name] = _ratio(rule_counts.get((lhs, rhs), 0), total_prods)
        if total_prods == 0:
            feats[name] = None

    # Phrasal-type ratios (13)
    phrase_nodes = [node for tree in parsed for node in tree.subtrees()
                    if not node.is_leaf and not node.is_preterminal]
    n_phrases = len(phrase_nodes)
    by_label: dict[str, list[ParseTree]] = {"NP": [], "VP": [], "PP": []}
    for node in phrase_nodes:
        if node.label in by_label:
            by_label[node.label].append(node)

    def yield_len(node: ParseTree) -> int:
        return len(node.leaves())

    for label in ("NP", "VP", "PP"):
        nodes = by_label[label]
        key = label.lower()
        feats[f"phr_{key}_proportion"] = _ratio(len(nodes), n_phrases)
        feats[f"phr_{key}_avg_len"] = (sum(yield_len(x) for x in nodes) / len(nodes)
                                       if nodes else None)
        feats[f"phr_{key}_rate"] = _ratio(len(nodes), w)
    feats["phr_np_to_vp"] = _ratio(len(by_label["NP"]), len(by_label["VP"]))
    feats["phr_pp_to_np"] = _ratio(len(by_label["PP"]), len(by_label["NP"]))
    combined = by_label["NP"] + by_label["VP"] + by_label["PP"]
    feats["phr_all_avg_len"] = (sum(yield_len(x) for x in combined) / len(combined)
                                if combined else None)
    feats["phr_all_rate"] = _ratio(len(combined), w)

    # POS-tag proportions (53) over registered preterminal tags
    tag_counts: dict[str, int] = {}
    for tree in parsed:
        for _, tag in tree.pos_pairs():
            tag_counts[tag] = tag_counts.get(tag, 0) + 1
    registered_total = sum(tag_counts.get(tag, 0) for tag in registry.pos_tags)
    for tag in registry.pos_tags:
        feats[f"pos_{safe_tag(tag)}"] = _ratio(tag_counts.get(tag, 0),
                                              registered_total)

    # Universal POS proportions (18) over mapped preterminal tags
    upos_counts: dict[str, int] = {}
    mapped_total = 0
    for tag, count in tag_counts.items():
        target = registry.upos_map.get(tag)
        if target is not None:
            upos_counts[target] = upos_counts.get(target, 0) + count
            mapped_total += count
    for target in registry.upos_targets:
        feats[f"upos_{target}"] = _ratio(upos_counts.get(target, 0), mapped_total)

    # Tense-switch cohesion (1): switches between consecutive verb-bearing
    # utterances, normalized by the number of parsed utterances.
    tenses = [t for t in (_utterance_tense(tree) for tree in parsed) if t is not None]
    switches = sum(1 for a, b in zip(tenses, tenses[1:]) if a != b)
    feats["tense_switch_rate"] = switches / len(parsed)

    return feats


SYNTAX_FEATURE_COUNT = 36 + 104 + 13 + 53 + 18 + 1


def syntax_feature_names(registry: ProductionRegistry) -> list[str]:
    """Feature names in canonical order (matches syntax_features keys)."""
    names = ["comp_mean_len_sentence", "comp_mean_len_tunit", "comp_mean_len_clause",
             "comp_clauses_per_sentence", "comp_vp_per_tunit", "comp_clauses_per_tunit",
             "comp_depclause_per_clause", "comp_depclause_per_tunit",
             "comp_tunit_per_sentence", "comp_complex_tunit_ratio",
             "comp_coordphrase_per_tunit", "comp_coordphrase_per_clause",
             "comp_complexnominal_per_tunit", "comp_complexnominal_per_clause"]
    names += [f"comp_n_{k}" for k in ("words", "sentences", "verbphrases", "clauses",
                                      "tunits", "depclauses", "complex_tunits",
                                      "coordphrases", "complexnominals")]
    names += ["comp_utt_len_max", "comp_utt_len_min", "comp_utt_len_mean",
              "comp_tree_depth_max", "comp_tree_depth_mean"]
    names += [f"comp_{k}_per_word" for k in ("sentences", "verbphrases", "clauses",
                                             "tunits", "depclauses", "complex_tunits",
                                             "coordphrases", "complexnominals")]
    names += [ProductionRegistry.rule_name(lhs, rhs) for lhs, rhs in registry.rules]
    for label in ("np", "vp", "pp"):
        names += [f"phr_{label}_proportion", f"phr_{label}_avg_len", f"phr_{label}_rate"]
    names += ["phr_np_to_vp", "phr_pp_to_np", "phr_all_avg_len", "phr_all_rate"]
    names += [f"pos_{safe_tag(tag)}" for tag in registry.pos_tags]
    names += [f"upos_{t}" for t in registry.upos_targets]
    names += ["tense_switch_rate"]
    return names
