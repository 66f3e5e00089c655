"""Word/token accounting and cost reports.

All currency arithmetic uses Decimal: values stay exact internally and are
rounded half-up to 2 places only for display. Word counting is
whitespace-token based for space-delimited languages and character based for
CJK (a documented approximation, not a linguistic claim). Token counts come
from the backend when the remote API reports usage; otherwise the estimator
here fills in, flagged as estimated.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Mapping

# languages whose word counts are character counts
CJK_LANGS = {"zh", "zh-HK", "zh-CN", "zh-TW", "ja", "ko"}

_CJK_RANGES = (
    (0x3000, 0x303F),  # CJK punctuation
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0xFF00, 0xFFEF),  # fullwidth forms
)


def _is_cjk_char(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def count_words(text: str, lang: str = "en") -> int:
    """Billing word count: whitespace tokens, or characters for CJK languages."""
    if lang in CJK_LANGS:
        return sum(1 for ch in text if not ch.isspace())
    return len(text.split())


def estimate_tokens(text: str) -> int:
    """Crude tokenizer-free estimate: one per CJK character, 1/4 per other char."""
    cjk = sum(1 for ch in text if _is_cjk_char(ch))
    other = len(text) - cjk
    return cjk + math.ceil(other / 4)


class PricingError(ValueError):
    """A cost computation references an unpriced backend or a bad price."""


def _decimal(value, what: str) -> Decimal:
    try:
        dec = Decimal(str(value))
    except ArithmeticError as exc:
        raise PricingError(f"{what}: not a number: {value!r}") from exc
    if dec < 0:
        raise PricingError(f"{what}: negative price {value!r}")
    return dec


@dataclass(frozen=True)
class BackendPrice:
    input_per_1k: Decimal
    output_per_1k: Decimal
    currency: str = "USD"


@dataclass(frozen=True)
class PricingTable:
    per_word_human_translation: Decimal = Decimal("0.12")
    per_word_human_editing: Decimal = Decimal("0.04")
    backend_prices: Mapping[str, BackendPrice] = field(default_factory=dict)

    def price_for(self, backend_id: str) -> BackendPrice:
        try:
            return self.backend_prices[backend_id]
        except KeyError:
            raise PricingError(f"no price configured for backend {backend_id!r}") from None


def load_pricing(
    path: str | Path,
    per_word_human_translation: Decimal | str = Decimal("0.12"),
    per_word_human_editing: Decimal | str = Decimal("0.04"),
) -> PricingTable:
    """Read per-backend token prices (object per line) into a pricing table."""
    prices: dict[str, BackendPrice] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            where = f"{Path(path).name}:{lineno}"
            backend_id = record["backend_id"]
            prices[backend_id] = BackendPrice(
                input_per_1k=_decimal(record["in_price"], where),
                output_per_1k=_decimal(record["out_price"], where),
                currency=record.get("currency", "USD"),
            )
    return PricingTable(
        per_word_human_translation=_decimal(per_word_human_translation, "human translation rate"),
        per_word_human_editing=_decimal(per_word_human_editing, "human editing rate"),
        backend_prices=prices,
    )


def default_pricing() -> PricingTable:
    """The bundled pricing table (mock backend prices, standard human rates)."""
    from importlib import resources

    with resources.as_file(
        resources.files("hmit.assets").joinpath("pricing.jsonl")
    ) as path:
        return load_pricing(path)


def human_cost(words: int, pricing: PricingTable, kind: str = "translation") -> Decimal:
    """words x per-word rate, exact."""
    if words < 0:
        raise ValueError("words must be non-negative")
    if kind == "translation":
        rate = pricing.per_word_human_translation
    elif kind == "editing":
        rate = pricing.per_word_human_editing
    else:
        raise ValueError(f"unknown human cost kind {kind!r}")
    return Decimal(words) * rate


@dataclass(frozen=True)
class UsageRecord:
    run_id: str
    doc_id: str
    seg_id: int
    role: str
    backend_id: str
    input_tokens: int
    output_tokens: int
    estimated: bool = False

    def validate(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError(f"negative token count in {self}")


class UsageLedger:
    """Append-only token usage log, optionally persisted object-per-line.

    Also carries the source-document word counts that human-cost comparisons
    are computed from.
    """

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._records: list[UsageRecord] = []
        self._source_words: dict[str, int] = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            self._replay()

    def _replay(self) -> None:
        with self._path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                data = json.loads(line)
                if data.get("type") == "source_words":
                    self._source_words[data["doc_id"]] = data["words"]
                else:
                    data.pop("type", None)
                    self._records.append(UsageRecord(**data))

    def _append_line(self, data: dict) -> None:
        if self._path is None:
            return
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with self._path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(data, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def add(self, record: UsageRecord) -> None:
        record.validate()
        with self._lock:
            self._append_line({"type": "usage", **record.__dict__})
            self._records.append(record)

    def set_source_words(self, doc_id: str, words: int) -> None:
        with self._lock:
            self._append_line({"type": "source_words", "doc_id": doc_id, "words": words})
            self._source_words[doc_id] = words

    def records(self) -> list[UsageRecord]:
        with self._lock:
            return list(self._records)

    def source_words(self) -> dict[str, int]:
        with self._lock:
            return dict(self._source_words)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


def api_cost(ledger: UsageLedger, pricing: PricingTable) -> tuple[dict[str, Decimal], Decimal]:
    """Exact per-role cost totals and their grand total."""
    per_role: dict[str, Decimal] = {}
    for record in ledger.records():
        price = pricing.price_for(record.backend_id)
        cost = (
            Decimal(record.input_tokens) * price.input_per_1k
            + Decimal(record.output_tokens) * price.output_per_1k
        ) / Decimal(1000)
        per_role[record.role] = per_role.get(record.role, Decimal(0)) + cost
    total = sum(per_role.values(), Decimal(0))
    return per_role, total


def cost_ratio(human: Decimal, api: Decimal) -> Decimal:
    """How many times cheaper the API run is than the human baseline."""
    if api <= 0:
        raise ValueError("api cost must be positive for a ratio")
    return human / api


def percent_saving(base: Decimal, other: Decimal) -> Decimal:
    """Saving of `other` relative to `base`, in percent (exact)."""
    if base == 0:
        raise ValueError("base cost must be non-zero")
    return (base - other) / base * 100


def format_currency(amount: Decimal) -> str:
    """Display form: half-up to 2 places with thousands separators."""
    return f"{amount.quantize(Decimal('0.01'), rounding=ROUND_HALF_UP):,}"


def format_percent(value: Decimal) -> str:
    return f"{value.quantize(Decimal('0.01'), rounding=ROUND_HALF_UP)}%"


@dataclass(frozen=True)
class SystemCost:
    system_id: str
    api_total: Decimal
    ratio_vs_human: Decimal


@dataclass(frozen=True)
class CostComparison:
    human_translation_cost: Decimal
    systems: tuple[SystemCost, ...]
    savings: Mapping[tuple[str, str], Decimal]


def cost_report(human: Decimal, api_totals: Mapping[str, Decimal]) -> CostComparison:
    """Ratios vs the human baseline plus pairwise savings between systems."""
    systems = tuple(
        SystemCost(system_id, total, cost_ratio(human, total))
        for system_id, total in api_totals.items()
    )
    savings: dict[tuple[str, str], Decimal] = {}
    for a, cost_a in api_totals.items():
        for b, cost_b in api_totals.items():
            if a != b and cost_a != 0:
                savings[(a, b)] = percent_saving(cost_a, cost_b)
    return CostComparison(
        human_translation_cost=human, systems=systems, savings=savings
    )


def render_cost_report(
    comparison: CostComparison, per_role: Mapping[str, Decimal] | None = None
) -> str:
    lines = [f"human translation: {format_currency(comparison.human_translation_cost)}"]
    if per_role:
        for role, total in per_role.items():
            lines.append(f"  {role}: {format_currency(total)}")
    for system in comparison.systems:
        ratio = system.ratio_vs_human.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
        lines.append(
            f"{system.system_id}: {format_currency(system.api_total)} "
            f"({ratio}x cheaper than human)"
        )
    for (a, b), pct in comparison.savings.items():
        lines.append(f"{b} vs {a}: saves {format_percent(pct)}")
    return "\n".join(lines)
