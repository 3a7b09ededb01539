import numpy as np
import pytest

from cogspeech.treebank import (DegenerateInputError, ParseTree, TreeParseError,
                                load_registry, parse_bracketed, print_tree,
                                productions, read_trees_file, syntax_features,
                                syntax_feature_names, SYNTAX_FEATURE_COUNT)


@pytest.fixture(scope="module")
def reg():
    return load_registry()


def depth_oracle(tree):
    """Brute-force recursion, independent of ParseTree.depth."""
    if tree.is_leaf:
        return 0
    return 1 + max(depth_oracle(c) for c in tree.children)


def random_tree(rng, depth=0):
    if depth >= 4 or rng.random() < 0.3:
        tag = rng.choice(["NN", "VBZ", "DT", "JJ", "PRP"])
        word = rng.choice(["boy", "runs", "the", "big", "he"])
        return ParseTree(label=tag, children=(ParseTree(label=word, leaf=word),))
    label = rng.choice(["S", "NP", "VP", "PP"])
    n_children = rng.integers(1, 4)
    return ParseTree(label=label,
                     children=tuple(random_tree(rng, depth + 1)
                                    for _ in range(n_children)))


class TestParsing:
    def test_basic_structure(self):
        t = parse_bracketed("(S (NP (DT the) (NN boy)) (VP (VBZ runs)))")
        assert t.label == "S"
        assert t.depth() == 3
        assert len(t.preterminals()) == 3
        assert t.leaves() == ["the", "boy", "runs"]

    def test_unbalanced_brackets(self):
        with pytest.raises(TreeParseError):
            parse_bracketed("(X a")

    def test_empty_node(self):
        with pytest.raises(TreeParseError):
            parse_bracketed("(S (NP))")

    def test_trailing_material(self):
        with pytest.raises(TreeParseError):
            parse_bracketed("(S (NN boy)) extra")

    def test_root_wrapper_unwrapped(self):
        t = parse_bracketed("( (S (NN boy)) )")
        assert t.label == "S"

    def test_print_parse_round_trip_random(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            tree = random_tree(rng)
            assert parse_bracketed(print_tree(tree)) == tree

    def test_trees_file_blank_line_is_missing_parse(self):
        trees = read_trees_file("(S (NN boy))\n\n(S (NN girl))\n")
        assert trees[0] is not None and trees[1] is None and trees[2] is not None


class TestDepth:
    def test_single_preterminal_depth_is_one(self):
        assert parse_bracketed("(NN boy)").depth() == 1

    def test_depth_matches_recursion_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            tree = random_tree(rng)
            assert tree.depth() == depth_oracle(tree)


class TestSyntaxFeatures:
    def test_production_proportion_hand_count(self, reg):
        tree = parse_bracketed("(S (NP (PRP I)) (VP (VBP run)))")
        assert productions(tree) == [("S", ("NP", "VP")), ("NP", ("PRP",)),
                                     ("VP", ("VBP",))]
        feats = syntax_features([tree], reg)
        assert feats["rule_S->NP_VP"] == pytest.approx(1.0 / 3.0)
        # NP -> PRP and VP -> VBP are not registered rules by design
        assert "rule_NP->PRP" not in feats
        assert "rule_VP->VBP" not in feats

    def test_all_noun_tree_has_zero_pronoun_proportion(self, reg):
        tree = parse_bracketed("(S (NP (NN cookie) (NN jar)))")
        feats = syntax_features([tree], reg)
        assert feats["pos_PRP"] == 0.0
        assert feats["upos_PRON"] == 0.0
        assert feats["pos_NN"] == 1.0

    def test_feature_count_and_name_alignment(self, reg):
        tree = parse_bracketed("(S (NP (DT the) (NN boy)) (VP (VBZ runs)))")
        feats = syntax_features([tree], reg)
        names = syntax_feature_names(reg)
        assert len(names) == SYNTAX_FEATURE_COUNT == 225
        assert list(feats.keys()) == names

    def test_pos_proportions_sum_to_one(self, reg):
        trees = [parse_bracketed("(S (NP (DT the) (JJ big) (NN boy))"
                                 " (VP (VBZ eats) (NP (NNS cookies))) (. .))")]
        feats = syntax_features(trees, reg)
        from cogspeech.treebank import safe_tag
        total = sum(feats[f"pos_{safe_tag(t)}"] for t in reg.pos_tags)
        assert total == pytest.approx(1.0, abs=1e-12)
        utotal = sum(feats[f"upos_{t}"] for t in reg.upos_targets)
        assert utotal == pytest.approx(1.0, abs=1e-12)

    def test_registered_proportions_sum_below_one_and_exactly_one(self, reg):
        # mixed: the unary NP -> PRP production is not in the registry
        mixed = parse_bracketed("(S (NP (PRP he)) (VP (VBZ runs)))")
        feats = syntax_features([mixed], reg)
        from cogspeech.treebank import ProductionRegistry
        reg_sum = sum(feats[ProductionRegistry.rule_name(lhs, rhs)]
                      for lhs, rhs in reg.rules)
        assert reg_sum <= 1.0 + 1e-12
        # fully covered: every production registered
        covered = parse_bracketed(
            "(S (NP (DT the) (NN boy)) (VP (VBZ is) (ADJP (JJ big))) (. .))")
        feats = syntax_features([covered], reg)
        reg_sum = sum(feats[ProductionRegistry.rule_name(lhs, rhs)]
                      for lhs, rhs in reg.rules)
        assert reg_sum == pytest.approx(1.0, abs=1e-12)

    def test_tense_cohesion_zero_when_uniform(self, reg):
        trees = [parse_bracketed("(S (NP (NN boy)) (VP (VBZ runs)))"),
                 parse_bracketed("(S (NP (NN girl)) (VP (VBZ eats)))")]
        assert syntax_features(trees, reg)["tense_switch_rate"] == 0.0

    def test_tense_switches_counted(self, reg):
        trees = [parse_bracketed("(S (NP (NN boy)) (VP (VBZ runs)))"),
                 parse_bracketed("(S (NP (NN girl)) (VP (VBD ran)))"),
                 parse_bracketed("(S (NP (NN dog)) (VP (VBZ eats)))")]
        assert syntax_features(trees, reg)["tense_switch_rate"] == \
            pytest.approx(2.0 / 3.0)

    def test_degenerate_input(self, reg):
        with pytest.raises(DegenerateInputError):
            syntax_features([], reg)
        with pytest.raises(DegenerateInputError):
            syntax_features([None, None], reg)

    def test_pronoun_fixture_mirrors_reported_class_means(self, reg):
        """AD-style trees overuse pronouns (~0.09 of tags) vs non-AD (~0.06)."""
        pron = "(S (NP (PRP he)) (VP (VBZ runs)) (. .))"          # 3 tags, 1 PRP
        noun = "(S (NP (DT the) (NN boy)) (VP (VBZ runs)) (. .))"  # 4 tags
        ad_trees = [parse_bracketed(pron)] * 4 + [parse_bracketed(noun)] * 8
        non_trees = [parse_bracketed(pron)] * 2 + [parse_bracketed(noun)] * 7
        ad = syntax_features(ad_trees, reg)["pos_PRP"]
        non = syntax_features(non_trees, reg)["pos_PRP"]
        assert ad == pytest.approx(0.09, abs=0.01)
        assert non == pytest.approx(0.06, abs=0.01)
        assert ad > non


class TestComplexityBlock:
    def test_unit_counts_on_known_tree(self, reg):
        tree = parse_bracketed(
            "(S (NP (DT the) (NN boy)) (VP (VBZ runs) (SBAR (IN because)"
            " (S (NP (PRP he)) (VP (VBZ wants) (NP (NNS cookies)))))) (. .))")
        feats = syntax_features([tree], reg)
        assert feats["comp_n_sentences"] == 1.0
        assert feats["comp_n_words"] == 7.0          # '.' is not a word
        assert feats["comp_n_clauses"] == 2.0        # outer S + embedded S
        assert feats["comp_n_depclauses"] == 1.0     # the SBAR
        assert feats["comp_n_tunits"] == 1.0         # embedded S has a clause ancestor
        assert feats["comp_n_complex_tunits"] == 1.0
        assert feats["comp_mean_len_clause"] == pytest.approx(3.5)

    def test_coordination_yields_two_tunits(self, reg):
        tree = parse_bracketed(
            "(S (S (NP (NN boy)) (VP (VBZ runs))) (CC and)"
            " (S (NP (NN girl)) (VP (VBZ eats))) (. .))")
        feats = syntax_features([tree], reg)
        assert feats["comp_n_tunits"] == 2.0
        assert feats["comp_n_clauses"] == 2.0
