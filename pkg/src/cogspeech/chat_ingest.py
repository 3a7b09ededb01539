"""CHAT transcript ingestion.

Parses the subset of the CHAT transcription format that the feature
extractors consume: main tier lines (``*PAR:``), dependent tiers (ignored),
bullet time-codes ``NNN_NNN``, filled pauses (``&-um``), retracing
(``[/]``, ``[//]``), unintelligible ``xxx`` and unfilled pause markers
``(.)`` ``(..)`` ``(...)``.  Full CHAT/CLAN compliance is a non-goal.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

PARTICIPANT_DEFAULT = "PAR"

FILLER_WORDS = {"um", "uh", "er", "eh", "em", "hm", "mhm", "uhm"}
PUNCT_TOKENS = {".", "?", "!", ","}

_TIER_RE = re.compile(r"^\*([A-Za-z0-9]+):\s*(.*)$")
_TIME_RE = re.compile(r"\x15?(\d+)_(\d+)\x15?\s*$")
_PAUSE_RE = re.compile(r"^\(\.{1,3}\)$")


class ChatParseError(ValueError):
    """Malformed CHAT input; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    is_filler: bool = False
    is_nonword: bool = False

    @property
    def is_word(self) -> bool:
        """True for lexical material: not a filler, nonword or punctuation."""
        return (not self.is_filler and not self.is_nonword
                and any(c.isalpha() for c in self.normalized))


@dataclass(frozen=True)
class Utterance:
    speaker: str
    tokens: tuple[Token, ...]
    start_ms: Optional[int] = None
    end_ms: Optional[int] = None
    raw: str = ""
    retraces: int = 0
    pause_marks: int = 0

    def words(self) -> list[Token]:
        return [t for t in self.tokens if t.is_word]

    def fillers(self) -> list[Token]:
        return [t for t in self.tokens if t.is_filler]


@dataclass
class Transcript:
    id: str
    utterances: list[Utterance] = field(default_factory=list)
    label: Optional[int] = None      # 1 = AD, 0 = non-AD
    mmse: Optional[int] = None
    audio_path: Optional[str] = None

    def __post_init__(self):
        if self.mmse is not None and not (0 <= self.mmse <= 30):
            raise ValueError(f"mmse out of range [0, 30]: {self.mmse}")


def _normalize_word(surface: str) -> str:
    """Lowercase and strip CHAT word-level markup (shortenings, @-suffixes)."""
    w = surface.lower()
    w = w.split("@", 1)[0]            # word@o style special-form markers
    w = w.replace("(", "").replace(")", "")   # (be)cause -> because
    w = w.strip("<>")
    return w


def _tokenize_tier(text: str, line_no: int) -> tuple[list[Token], int, int]:
    """Turn main-tier text into tokens, a retrace tally and a pause tally.

    Retraced material ([/] repetition, [//] correction) is dropped from the
    token list: the marker erases the immediately preceding token or
    ``<...>`` group, mirroring CLAN's default exclusion.
    """
    tokens: list[Token] = []
    group_start: list[int] = []       # token indices where a < group opened
    last_group: tuple[int, int] | None = None
    retraces = 0
    pauses = 0

    for chunk in text.split():
        if _PAUSE_RE.match(chunk):
            pauses += 1
            continue
        if chunk in ("[/]", "[//]"):
            retraces += 1
            if last_group is not None:
                del tokens[last_group[0]:last_group[1]]
                last_group = None
            elif tokens:
                tokens.pop()
            continue
        if chunk.startswith("["):     # other bracketed codes: not consumed
            continue
        opened = chunk.startswith("<")
        closed = chunk.endswith(">")
        word = chunk
        if opened:
            group_start.append(len(tokens))
            word = word[1:]
        if closed:
            word = word[:-1]
        if word:
            tok = _make_token(word)
            if tok is not None:
                tokens.append(tok)
        if closed:
            start = group_start.pop() if group_start else 0
            last_group = (start, len(tokens))
        elif not opened and not group_start:
            last_group = None
    return tokens, retraces, pauses


def _make_token(word: str) -> Optional[Token]:
    if word.startswith("&=") or word.startswith("&+"):
        return None                   # events / phonological fragments
    if word.startswith("&-") or word.startswith("&"):
        norm = _normalize_word(word.lstrip("&-"))
        return Token(word, norm, is_filler=True) if norm else None
    if word in PUNCT_TOKENS:
        return Token(word, word)
    if word.startswith("+"):          # +... / +/. terminators
        return Token(word, ".")
    if word == "xxx" or word == "yyy":
        return Token(word, word, is_nonword=True)
    norm = _normalize_word(word)
    if not norm:
        return None
    if norm in FILLER_WORDS:
        return Token(word, norm, is_filler=True)
    return Token(word, norm)


def parse_chat(text: str, transcript_id: str = "") -> Transcript:
    """Parse the full contents of a .cha file into a Transcript.

    One Utterance per main tier line (continuation lines are folded in);
    header (@) and dependent (%) tiers are skipped.  Unknown speaker codes
    are preserved.  Raises ChatParseError with a line number for malformed
    tier lines.
    """
    transcript = Transcript(id=transcript_id)
    pending: tuple[str, str, int] | None = None   # (speaker, text, line_no)

    def flush():
        nonlocal pending
        if pending is None:
            return
        speaker, body, line_no = pending
        pending = None
        start = end = None
        m = _TIME_RE.search(body)
        if m:
            start, end = int(m.group(1)), int(m.group(2))
            if end < start:
                raise ChatParseError(f"time code ends before it starts: {m.group(0)!r}",
                                     line_no)
            body = body[:m.start()].rstrip()
        tokens, retraces, pauses = _tokenize_tier(body, line_no)
        transcript.utterances.append(Utterance(
            speaker=speaker, tokens=tuple(tokens), start_ms=start, end_ms=end,
            raw=body, retraces=retraces, pause_marks=pauses))

    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith(("\t", " ")) and pending is not None:
            speaker, body, first = pending
            pending = (speaker, body + " " + line.strip(), first)
            continue
        flush()
        if line.startswith("@") or line.startswith("%"):
            continue
        if line.startswith("*"):
            m = _TIER_RE.match(line)
            if not m:
                raise ChatParseError(f"malformed tier line: {line.strip()!r}", line_no)
            pending = (m.group(1), m.group(2), line_no)
            continue
        raise ChatParseError(f"unrecognized line: {line.strip()!r}", line_no)
    flush()
    return transcript


def participant_utterances(t: Transcript,
                           participant: str = PARTICIPANT_DEFAULT) -> list[Utterance]:
    """The participant's utterances, original order preserved."""
    return [u for u in t.utterances if u.speaker == participant]


def participant_segments(t: Transcript,
                         participant: str = PARTICIPANT_DEFAULT
                         ) -> Optional[list[tuple[int, int]]]:
    """Merged, sorted, non-overlapping (start_ms, end_ms) speech intervals.

    Returns None (the explicit no-timing result) when no participant
    utterance carries timestamps; callers then fall back to energy-based
    detection over the whole recording.
    """
    spans = sorted((u.start_ms, u.end_ms) for u in participant_utterances(t, participant)
                   if u.start_ms is not None and u.end_ms is not None)
    if not spans:
        return None
    merged = [spans[0]]
    for start, end in spans[1:]:
        if start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def participant_text(t: Transcript, participant: str = PARTICIPANT_DEFAULT,
                     include_fillers: bool = False) -> str:
    """Space-joined normalized participant words (export surface for BERT-style
    consumers and debugging)."""
    out = []
    for u in participant_utterances(t, participant):
        for tok in u.tokens:
            if tok.is_word or (include_fillers and tok.is_filler):
                out.append(tok.normalized)
    return " ".join(out)


# ---------------------------------------------------------------------------
# Canonical debug dump: one JSON record per utterance, lossless round trip.

def transcript_to_jsonl(t: Transcript) -> str:
    lines = [json.dumps({"id": t.id, "label": t.label, "mmse": t.mmse,
                         "audio_path": t.audio_path})]
    for u in t.utterances:
        lines.append(json.dumps({
            "speaker": u.speaker,
            "tokens": [[tok.surface, tok.normalized, tok.is_filler, tok.is_nonword]
                       for tok in u.tokens],
            "start_ms": u.start_ms, "end_ms": u.end_ms, "raw": u.raw,
            "retraces": u.retraces, "pause_marks": u.pause_marks,
        }))
    return "\n".join(lines) + "\n"


def transcript_from_jsonl(text: str) -> Transcript:
    lines = [l for l in text.splitlines() if l.strip()]
    head = json.loads(lines[0])
    t = Transcript(id=head["id"], label=head["label"], mmse=head["mmse"],
                   audio_path=head["audio_path"])
    for line in lines[1:]:
        rec = json.loads(line)
        t.utterances.append(Utterance(
            speaker=rec["speaker"],
            tokens=tuple(Token(*tok) for tok in rec["tokens"]),
            start_ms=rec["start_ms"], end_ms=rec["end_ms"], raw=rec["raw"],
            retraces=rec["retraces"], pause_marks=rec["pause_marks"]))
    return t
