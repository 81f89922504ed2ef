"""Dialogue turns, slot-value candidates, and the state-generator interface.

A state generator emits one line per turn in the sequence format

    slot1: value1; slot2: value2 [eos]

Pairs are separated by "; ", slot and value by the first ": " inside a
pair, and the trailing "[eos]" marker is optional.  Values containing
"; " or "[eos]" are unrepresentable in this format and are rejected on
serialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import requests

from .errors import (
    BackendUnavailable,
    CorpusFormatError,
    MalformedPair,
    MissingReplay,
)

EOS_MARKER = "[eos]"
PAIR_SEP = "; "
SLOT_SEP = ": "

SPEAKERS = ("user", "system")


@dataclass(frozen=True)
class DialogueTurn:
    dialogue_id: str
    turn_index: int
    speaker: str
    text: str


@dataclass(frozen=True)
class SlotValueCandidate:
    """One generated (slot, value) pair tied to a dialogue turn.

    ``candidate_id`` equals the candidate's rank under the ordering
    (dialogue_id, turn_index, position) and is the row index used by the
    embedding and clustering stages.
    """

    candidate_id: int
    slot_name: str
    value: str
    dialogue_id: str
    turn_index: int
    position: int

    @property
    def source(self) -> tuple[str, int]:
        return (self.dialogue_id, self.turn_index)


@dataclass
class CandidateCorpus:
    turns: list[DialogueTurn] = field(default_factory=list)
    candidates: list[SlotValueCandidate] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.candidates)


def _split_pair(fragment: str) -> tuple[str, str]:
    if SLOT_SEP not in fragment:
        raise MalformedPair(fragment)
    slot, value = fragment.split(SLOT_SEP, 1)
    slot = slot.strip()
    value = value.strip()
    if not slot or not value:
        raise MalformedPair(fragment)
    return slot, value


def _strip_eos(sequence: str) -> str:
    text = sequence.strip()
    if text.endswith(EOS_MARKER):
        text = text[: -len(EOS_MARKER)].rstrip()
    return text


def parse_state_update(sequence: str) -> list[tuple[str, str]]:
    """Parse one generator output line into (slot, value) pairs.

    Raises :class:`MalformedPair` on the first fragment without a ": "
    delimiter or with an empty side.  Use :func:`parse_state_update_lenient`
    to skip bad fragments instead.
    """
    text = _strip_eos(sequence)
    if not text:
        return []
    return [_split_pair(fragment) for fragment in text.split(PAIR_SEP)]


def parse_state_update_lenient(
    sequence: str,
) -> tuple[list[tuple[str, str]], list[str]]:
    """Like :func:`parse_state_update` but collects malformed fragments.

    Returns (pairs, skipped_fragments); generator output is model text, so
    downstream batch tooling defaults to this mode.
    """
    text = _strip_eos(sequence)
    if not text:
        return [], []
    pairs: list[tuple[str, str]] = []
    skipped: list[str] = []
    for fragment in text.split(PAIR_SEP):
        try:
            pairs.append(_split_pair(fragment))
        except MalformedPair:
            skipped.append(fragment)
    return pairs, skipped


def serialize_state_update(pairs: Iterable[tuple[str, str]]) -> str:
    """Inverse of :func:`parse_state_update` for representable pairs."""
    rendered = []
    for slot, value in pairs:
        for side in (slot, value):
            if PAIR_SEP in side or EOS_MARKER in side or not side.strip():
                raise ValueError(f"unrepresentable token in sequence format: {side!r}")
        if SLOT_SEP in slot:
            raise ValueError(f"unrepresentable slot name: {slot!r}")
        rendered.append(f"{slot}{SLOT_SEP}{value}")
    if not rendered:
        return EOS_MARKER
    return PAIR_SEP.join(rendered) + " " + EOS_MARKER


def _read_jsonl(path) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(path, line_no, f"invalid JSON: {exc.msg}")
            if not isinstance(record, dict):
                raise CorpusFormatError(path, line_no, "record is not an object")
            yield line_no, record


def _require(record: dict, key: str, kind, path, line_no: int):
    if key not in record:
        raise CorpusFormatError(path, line_no, f"missing {key!r} field")
    value = record[key]
    if kind is int and isinstance(value, bool):
        raise CorpusFormatError(path, line_no, f"{key!r} must be an integer")
    if not isinstance(value, kind):
        raise CorpusFormatError(path, line_no, f"{key!r} has wrong type")
    return value


def load_turns(path) -> list[DialogueTurn]:
    """Load a turns file and check (dialogue_id, turn_index) integrity."""
    turns: list[DialogueTurn] = []
    seen: set[tuple[str, int]] = set()
    for line_no, record in _read_jsonl(path):
        dialogue_id = _require(record, "dialogue_id", str, path, line_no)
        turn_index = _require(record, "turn_index", int, path, line_no)
        speaker = _require(record, "speaker", str, path, line_no)
        text = _require(record, "text", str, path, line_no)
        if turn_index < 0:
            raise CorpusFormatError(path, line_no, "turn_index must be >= 0")
        if speaker not in SPEAKERS:
            raise CorpusFormatError(path, line_no, f"unknown speaker {speaker!r}")
        key = (dialogue_id, turn_index)
        if key in seen:
            raise CorpusFormatError(path, line_no, f"duplicate turn {key}")
        seen.add(key)
        turns.append(DialogueTurn(dialogue_id, turn_index, speaker, text))
    _check_dense(turns, path)
    return sorted(turns, key=lambda t: (t.dialogue_id, t.turn_index))


def _check_dense(turns: Sequence[DialogueTurn], path) -> None:
    by_dialogue: dict[str, set[int]] = {}
    for turn in turns:
        by_dialogue.setdefault(turn.dialogue_id, set()).add(turn.turn_index)
    for dialogue_id, indices in by_dialogue.items():
        if indices != set(range(len(indices))):
            raise CorpusFormatError(
                path, 0, f"dialogue {dialogue_id!r}: turn_index not dense from 0"
            )


def load_corpus(candidates_path, turns_path=None) -> CandidateCorpus:
    """Load candidates (and optionally turns) into an ordered corpus.

    Candidate ids are assigned by rank under (dialogue_id, turn_index,
    position), where position is the candidate's order of appearance within
    its turn.  Duplicate (source, slot, value) triples are retained: each
    occurrence is a distinct clustering point.
    """
    rows: list[tuple[str, int, int, str, str]] = []
    positions: dict[tuple[str, int], int] = {}
    for line_no, record in _read_jsonl(candidates_path):
        dialogue_id = _require(record, "dialogue_id", str, candidates_path, line_no)
        turn_index = _require(record, "turn_index", int, candidates_path, line_no)
        slot = _require(record, "slot", str, candidates_path, line_no).strip()
        value = _require(record, "value", str, candidates_path, line_no).strip()
        if turn_index < 0:
            raise CorpusFormatError(candidates_path, line_no, "turn_index must be >= 0")
        if not slot:
            raise CorpusFormatError(candidates_path, line_no, "'slot' is empty")
        if not value:
            raise CorpusFormatError(candidates_path, line_no, "'value' is empty")
        source = (dialogue_id, turn_index)
        position = positions.get(source, 0)
        positions[source] = position + 1
        rows.append((dialogue_id, turn_index, position, slot, value))

    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    candidates = [
        SlotValueCandidate(cid, slot, value, dialogue_id, turn_index, position)
        for cid, (dialogue_id, turn_index, position, slot, value) in enumerate(rows)
    ]

    if turns_path is not None:
        turns = load_turns(turns_path)
        known = {(t.dialogue_id, t.turn_index) for t in turns}
        for cand in candidates:
            if cand.source not in known:
                raise CorpusFormatError(
                    candidates_path,
                    0,
                    f"candidate {cand.candidate_id} references unknown turn {cand.source}",
                )
    else:
        turns = _synthesize_turns(candidates)
    return CandidateCorpus(turns=turns, candidates=candidates)


def _synthesize_turns(candidates: Sequence[SlotValueCandidate]) -> list[DialogueTurn]:
    # No turns file: fabricate empty user turns 0..max_index per dialogue so
    # the corpus still satisfies the dense-turn invariant.
    max_index: dict[str, int] = {}
    for cand in candidates:
        max_index[cand.dialogue_id] = max(
            max_index.get(cand.dialogue_id, 0), cand.turn_index
        )
    return [
        DialogueTurn(dialogue_id, i, "user", "")
        for dialogue_id in sorted(max_index)
        for i in range(max_index[dialogue_id] + 1)
    ]


def write_candidates(path, records: Iterable[tuple[str, int, str, str]]) -> None:
    """Write candidate records as line-delimited JSON.

    ``records`` yields (dialogue_id, turn_index, slot, value); position is
    implied by line order within each turn.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for dialogue_id, turn_index, slot, value in records:
            fh.write(
                json.dumps(
                    {
                        "dialogue_id": dialogue_id,
                        "turn_index": turn_index,
                        "slot": slot,
                        "value": value,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


class ReplayBackend:
    """Deterministic generator backend replaying canned outputs.

    Keyed by (dialogue_id, turn_index) of the last context turn.
    """

    def __init__(self, sequences: dict[tuple[str, int], str]):
        self.sequences = dict(sequences)

    @classmethod
    def from_jsonl(cls, path) -> "ReplayBackend":
        sequences: dict[tuple[str, int], str] = {}
        for line_no, record in _read_jsonl(path):
            dialogue_id = _require(record, "dialogue_id", str, path, line_no)
            turn_index = _require(record, "turn_index", int, path, line_no)
            sequence = _require(record, "sequence", str, path, line_no)
            sequences[(dialogue_id, turn_index)] = sequence
        return cls(sequences)

    def fetch(self, context: Sequence[DialogueTurn]) -> str:
        if not context:
            raise ValueError("generator context is empty")
        key = (context[-1].dialogue_id, context[-1].turn_index)
        try:
            return self.sequences[key]
        except KeyError:
            raise MissingReplay(f"no replayed sequence for turn {key}") from None


class RemoteGeneratorBackend:
    """Generator backend speaking the POST /generate protocol."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def fetch(self, context: Sequence[DialogueTurn]) -> str:
        if not context:
            raise ValueError("generator context is empty")
        body = {"context": [{"speaker": t.speaker, "text": t.text} for t in context]}
        try:
            response = requests.post(self.endpoint, json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"generator endpoint failed: {exc}") from exc
        if response.status_code != 200:
            raise BackendUnavailable(
                f"generator endpoint returned status {response.status_code}"
            )
        try:
            sequence = response.json()["sequence"]
        except (ValueError, KeyError):
            raise BackendUnavailable("generator endpoint returned malformed body")
        if not isinstance(sequence, str):
            raise BackendUnavailable("generator endpoint returned non-string sequence")
        return sequence


def fetch_state_update(backend, context: Sequence[DialogueTurn], window: int | None = None) -> str:
    """Fetch the raw state-update sequence for a dialogue context.

    ``window`` limits the context to its last N turns; the default feeds the
    full dialogue prefix.
    """
    if window is not None:
        context = context[-window:]
    return backend.fetch(context)
