"""Synthetic corpus generator.

Emits a 12-transcript picture-description corpus (CHAT + trees + WAV +
labels.csv) together with the resource files extraction needs (norm
lexicon, five embedding files, config.json).  The two classes are
engineered to differ the way the clinical literature suggests: the AD
half uses shorter pronoun-heavy utterances, fillers, retracing,
neologisms, fewer scene content units and longer pauses.

Everything is deterministic under the seed, and every feature in the
registry is computable on the output (no masked values), which the
acceptance suite relies on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acoustics import AudioSignal, write_wav
from .config import DEFAULT_SPACE_DIMS, DEFAULT_SPACE_NAMES

SAMPLE_RATE = 16000


@dataclass(frozen=True)
class UttTemplate:
    words: str           # space-joined surface words (no terminator)
    tree: str            # bracketed parse whose leaves = words + '.'
    chat: str = ""       # CHAT rendering override (fillers, retracing)

    def chat_text(self) -> str:
        return self.chat if self.chat else self.words


NON_AD_TEMPLATES = [
    UttTemplate(
        "the boy is taking cookies from the jar",
        "(S (NP (DT the) (NN boy)) (VP (VBZ is) (VP (VBG taking) (NP (NNS cookies))"
        " (PP (IN from) (NP (DT the) (NN jar))))) (. .))"),
    UttTemplate(
        "the stool is falling over",
        "(S (NP (DT the) (NN stool)) (VP (VBZ is) (VP (VBG falling)"
        " (ADVP (RB over)))) (. .))"),
    UttTemplate(
        "the mother is washing dishes at the sink",
        "(S (NP (DT the) (NN mother)) (VP (VBZ is) (VP (VBG washing)"
        " (NP (NNS dishes)) (PP (IN at) (NP (DT the) (NN sink))))) (. .))"),
    UttTemplate(
        "water is overflowing in the sink",
        "(S (NP (NN water)) (VP (VBZ is) (VP (VBG overflowing)"
        " (PP (IN in) (NP (DT the) (NN sink))))) (. .))"),
    UttTemplate(
        "the little girl is asking for a cookie",
        "(S (NP (DT the) (JJ little) (NN girl)) (VP (VBZ is) (VP (VBG asking)"
        " (PP (IN for) (NP (DT a) (NN cookie))))) (. .))"),
    UttTemplate(
        "the window is open and the curtains are wet",
        "(S (S (NP (DT the) (NN window)) (VP (VBZ is) (ADJP (JJ open)))) (CC and)"
        " (S (NP (DT the) (NNS curtains)) (VP (VBP are) (ADJP (JJ wet)))) (. .))"),
    UttTemplate(
        "she sees the water on the floor",
        "(S (NP (PRP she)) (VP (VBZ sees) (NP (NP (DT the) (NN water))"
        " (PP (IN on) (NP (DT the) (NN floor))))) (. .))"),
    UttTemplate(
        "the boy stood on a stool to reach the jar",
        "(S (NP (DT the) (NN boy)) (VP (VBD stood) (PP (IN on) (NP (DT a)"
        " (NN stool))) (S (VP (TO to) (VP (VB reach) (NP (DT the) (NN jar))))))"
        " (. .))"),
    UttTemplate(
        "the mother did not notice the children",
        "(S (NP (DT the) (NN mother)) (VP (VBD did) (RB not) (VP (VB notice)"
        " (NP (DT the) (NNS children)))) (. .))"),
    UttTemplate(
        "the boy wanted a cookie and the girl wanted a plate",
        "(S (S (NP (DT the) (NN boy)) (VP (VBD wanted) (NP (DT a) (NN cookie))))"
        " (CC and) (S (NP (DT the) (NN girl)) (VP (VBD wanted) (NP (DT a)"
        " (NN plate)))) (. .))"),
    UttTemplate(
        "the water runs carelessly over the sink",
        "(S (NP (DT the) (NN water)) (VP (VBZ runs) (ADVP (RB carelessly))"
        " (PP (IN over) (NP (DT the) (NN sink)))) (. .))"),
    UttTemplate(
        "outside the window you can see the garden",
        "(S (PP (IN outside) (NP (DT the) (NN window))) (NP (PRP you))"
        " (VP (MD can) (VP (VB see) (NP (DT the) (NN garden)))) (. .))"),
    UttTemplate(
        "the girl reaches up because she wants a cookie",
        "(S (NP (DT the) (NN girl)) (VP (VBZ reaches) (ADVP (RB up))"
        " (SBAR (IN because) (S (NP (PRP she)) (VP (VBZ wants) (NP (DT a)"
        " (NN cookie)))))) (. .))"),
    UttTemplate(
        "two cups are on the counter",
        "(S (NP (CD two) (NNS cups)) (VP (VBP are) (PP (IN on) (NP (DT the)"
        " (NN counter)))) (. .))"),
]

AD_TEMPLATES = [
    UttTemplate(
        "he is taking it",
        "(S (NP (PRP he)) (VP (VBZ is) (VP (VBG taking) (NP (PRP it)))) (. .))",
        chat="he is &-um taking it"),
    UttTemplate(
        "she fell down",
        "(S (NP (PRP she)) (VP (VBD fell) (ADVP (RB down))) (. .))"),
    UttTemplate(
        "it is dirty",
        "(S (NP (PRP it)) (VP (VBZ is) (ADJP (JJ dirty))) (. .))"),
    UttTemplate(
        "that thing is falling",
        "(S (NP (DT that) (NN thing)) (VP (VBZ is) (VP (VBG falling))) (. .))"),
    UttTemplate(
        "the flumber is wet",
        "(S (NP (DT the) (NN flumber)) (VP (VBZ is) (ADJP (JJ wet))) (. .))"),
    UttTemplate(
        "he wants xxx",
        "(S (NP (PRP he)) (VP (VBZ wants) (NP (XX xxx))) (. .))"),
    UttTemplate(
        "she is doing it there",
        "(S (NP (PRP she)) (VP (VBZ is) (VP (VBG doing) (NP (PRP it))"
        " (ADVP (RB there)))) (. .))",
        chat="she is &-uh doing it there"),
    UttTemplate(
        "they are here",
        "(S (NP (PRP they)) (VP (VBP are) (ADVP (RB here))) (. .))"),
    UttTemplate(
        "he took the thing from her",
        "(S (NP (PRP he)) (VP (VBD took) (NP (DT the) (NN thing)) (PP (IN from)"
        " (NP (PRP her)))) (. .))"),
    UttTemplate(
        "it fell",
        "(S (NP (PRP it)) (VP (VBD fell)) (. .))",
        chat="&-um it [/] it fell"),
    UttTemplate(
        "she wants that",
        "(S (NP (PRP she)) (VP (VBZ wants) (NP (DT that))) (. .))"),
    UttTemplate(
        "he is taking cookies",
        "(S (NP (PRP he)) (VP (VBZ is) (VP (VBG taking) (NP (NNS cookies))))"
        " (. .))",
        chat="<the boy> [//] he is taking cookies"),
    UttTemplate(
        "there is water",
        "(S (NP (EX there)) (VP (VBZ is) (NP (NN water))) (. .))"),
    UttTemplate(
        "he is glumping the water",
        "(S (NP (PRP he)) (VP (VBZ is) (VP (VBG glumping) (NP (DT the)"
        " (NN water)))) (. .))"),
]

INV_PROMPTS = [
    "tell me everything you see in the picture",
    "what else is happening",
    "anything more",
    "just describe what you see",
]


def corpus_vocabulary() -> list[str]:
    """Every surface word any generated transcript can contain."""
    vocab: set[str] = set()
    for tmpl in NON_AD_TEMPLATES + AD_TEMPLATES:
        vocab.update(tmpl.words.split())
        vocab.update(w.lstrip("&-<").rstrip(">") for w in tmpl.chat_text().split()
                     if not w.startswith("["))
    for prompt in INV_PROMPTS:
        vocab.update(prompt.split())
    from .semantics import ContentUnitLexicon
    for unit in ContentUnitLexicon.shipped().units:
        vocab.update(unit.lemmas)
    vocab.discard("")
    return sorted(vocab)


def _tone(duration_s: float, freq: float, rng: np.random.Generator,
          amplitude: float = 0.5) -> np.ndarray:
    n = int(round(duration_s * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE
    return amplitude * np.sin(2 * np.pi * freq * t) + rng.normal(0, 1e-4, n)


def _silence(duration_s: float, rng: np.random.Generator) -> np.ndarray:
    n = int(round(duration_s * SAMPLE_RATE))
    return rng.normal(0, 2e-4, n)


@dataclass
class GeneratedTranscript:
    id: str
    label: int
    mmse: float | None
    cha: str
    trees: str
    audio: AudioSignal


def generate_transcript(tid: str, label: int, mmse: float | None,
                        rng: np.random.Generator) -> GeneratedTranscript:
    templates = AD_TEMPLATES if label == 1 else NON_AD_TEMPLATES
    n_utts = int(rng.integers(5, 8))
    chosen = list(rng.choice(len(templates), size=n_utts, replace=False))
    if label == 1:
        # Guarantee content-unit mentions and at least one PP per transcript.
        if not any(i in (0, 11, 12, 13) for i in chosen):
            chosen[0] = 0
        if 8 not in chosen:
            chosen[1] = 8

    cha_lines = ["@Begin", "@Languages:\teng",
                 "@Participants:\tPAR Participant, INV Investigator",
                 "@ID:\teng|fixture|PAR|||||Participant|||", "@Media:\t"
                 f"{tid}, audio"]
    tree_lines: list[str] = []
    audio_parts: list[np.ndarray] = []
    clock_ms = 0
    pitch = float(rng.uniform(180, 230))
    inv_pitch = float(rng.uniform(110, 140))

    def advance(ms: int) -> tuple[int, int]:
        nonlocal clock_ms
        start = clock_ms
        clock_ms += ms
        return start, clock_ms

    # Opening investigator prompt.
    prompt = INV_PROMPTS[int(rng.integers(0, len(INV_PROMPTS)))]
    dur = int(rng.integers(900, 1400))
    start, end = advance(dur)
    cha_lines.append(f"*INV:\t{prompt} . {start}_{end}")
    audio_parts.append(_tone(dur / 1000.0, inv_pitch, rng, amplitude=0.4))

    for j, idx in enumerate(chosen):
        tmpl = templates[idx]
        gap = int(rng.integers(400, 900)) if label == 1 else int(rng.integers(150, 450))
        advance(gap)
        audio_parts.append(_silence(gap / 1000.0, rng))

        if label == 1:
            inner_pause = float(rng.uniform(0.45, 0.80))
        else:
            inner_pause = float(rng.uniform(0.18, 0.35))
        n_words = len(tmpl.words.split())
        speech_s = max(0.9, 0.32 * n_words)
        utt_ms = int(round((speech_s + inner_pause) * 1000))
        start, end = advance(utt_ms)
        cha_lines.append(f"*PAR:\t{tmpl.chat_text()} . {start}_{end}")
        tree_lines.append(tmpl.tree)
        head = 0.45 * speech_s
        audio_parts.append(_tone(head, pitch, rng))
        audio_parts.append(_silence(inner_pause, rng))
        audio_parts.append(_tone(speech_s - head, pitch * 1.03, rng))

        if j == 2 and n_utts > 4:
            gap = int(rng.integers(200, 500))
            advance(gap)
            audio_parts.append(_silence(gap / 1000.0, rng))
            prompt = INV_PROMPTS[int(rng.integers(0, len(INV_PROMPTS)))]
            dur = int(rng.integers(800, 1200))
            start, end = advance(dur)
            cha_lines.append(f"*INV:\t{prompt} . {start}_{end}")
            audio_parts.append(_tone(dur / 1000.0, inv_pitch, rng, amplitude=0.4))

    advance(250)
    audio_parts.append(_silence(0.25, rng))
    cha_lines.append("@End")
    samples = np.concatenate(audio_parts)
    return GeneratedTranscript(
        id=tid, label=label, mmse=mmse,
        cha="\n".join(cha_lines) + "\n",
        trees="\n".join(tree_lines) + "\n",
        audio=AudioSignal(samples=np.clip(samples, -1, 1), sample_rate=SAMPLE_RATE))


def write_embeddings(path: Path, vocab: list[str], dim: int,
                     rng: np.random.Generator):
    with open(path, "w", encoding="utf-8") as f:
        for word in vocab:
            vec = rng.normal(0, 1, dim)
            vec /= np.linalg.norm(vec)
            f.write(word + " " + " ".join(format(x, ".6f") for x in vec) + "\n")


def write_norms(path: Path, vocab: list[str], rng: np.random.Generator):
    norms = ("imageability", "age_of_acquisition", "familiarity", "frequency",
             "valence", "arousal", "dominance")
    with open(path, "w", encoding="utf-8") as f:
        f.write("# synthetic norm lexicon (fixture)\n")
        for word in vocab:
            for norm in norms:
                f.write(f"{word}\t{norm}\t{rng.uniform(1.0, 7.0):.3f}\n")


def generate_corpus(out_dir, seed: int = 7, n_per_class: int = 6) -> Path:
    """Write the full synthetic corpus + resources; returns the corpus dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    rows = []
    for i in range(2 * n_per_class):
        label = 1 if i < n_per_class else 0
        tid = f"S{i + 1:03d}"
        if label == 1:
            mmse: float | None = int(rng.integers(16, 25))
        else:
            mmse = int(rng.integers(27, 31))
        if i == 2 * n_per_class - 1:
            mmse = None     # one participant without a score
        gen = generate_transcript(tid, label, mmse, rng)
        (out / f"{tid}.cha").write_text(gen.cha, encoding="utf-8")
        (out / f"{tid}.trees").write_text(gen.trees, encoding="utf-8")
        write_wav(out / f"{tid}.wav", gen.audio)
        rows.append((tid, "AD" if label == 1 else "non-AD",
                     "" if mmse is None else str(int(mmse))))

    with open(out / "labels.csv", "w", encoding="utf-8") as f:
        f.write("id,label,mmse\n")
        for tid, label, mmse in rows:
            f.write(f"{tid},{label},{mmse}\n")

    vocab = corpus_vocabulary()
    emb_rng = np.random.default_rng(seed + 1)
    embeddings = []
    for name, dim in zip(DEFAULT_SPACE_NAMES, DEFAULT_SPACE_DIMS):
        fname = f"emb_{name}.txt"
        write_embeddings(out / fname, vocab, dim, emb_rng)
        embeddings.append({"name": name, "dim": dim, "path": fname})
    write_norms(out / "norms.tsv", vocab, np.random.default_rng(seed + 2))

    config = {
        "norms_path": "norms.tsv",
        "embeddings": embeddings,
        "seeds": [0, 1, 2],
    }
    (out / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")
    return out
