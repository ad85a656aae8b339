"""Deterministic synthetic form corpora with planted key phrases.

Every generated document is a plan of lines (key/value lines, two-column
table rows, corner blocks, boilerplate noise) laid out in normalized page
coordinates and then flattened into a token stream with ground truth.
The built-in specs cover the situations the pipeline has to survive:
tabular docs with contradictory column pairs, mixed-type bills, an
out-of-domain pretraining corpus, and fields with no key phrases at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .documents import (
    Box,
    Document,
    FieldSchema,
    FieldSpec,
    FieldSpan,
    Token,
    _check_keys,
)

TEMPLATE_KINDS = ("key_left_value_right", "key_above_value", "two_column_table")

LINE_HEIGHT = 0.018
_TOKEN_GAP = 0.010

_MONTH_NAMES = (
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
)

_STREET_NAMES = (
    "Maple", "Oak", "Cedar", "Elm", "Birch", "Walnut", "Highland", "Sunset",
    "Ridge", "Lakeview", "Prairie", "Jefferson", "Madison", "Franklin",
    "Harrison", "Lincoln", "Willow", "Juniper", "Magnolia", "Sycamore",
)
_STREET_SUFFIXES = ("St", "Ave", "Road", "Blvd", "Lane", "Drive", "Court", "Way")
_CITIES = (
    "Fairview", "Riverton", "Brookfield", "Ashland", "Centerville", "Milton",
    "Clayton", "Georgetown", "Kingston", "Dayton", "Burlington", "Salem",
)
_FIRST_NAMES = (
    "James", "Maria", "Robert", "Linda", "Michael", "Susan", "David", "Karen",
    "Thomas", "Nancy", "Daniel", "Laura", "Paul", "Emma", "Mark", "Alice",
)
_LAST_NAMES = (
    "Walker", "Reyes", "Bennett", "Hughes", "Foster", "Coleman", "Jenkins",
    "Perry", "Long", "Ross", "Powell", "Barnes", "Fisher", "Grant", "Hayes",
)
_CORP_WORDS = (
    "Acme", "Pinnacle", "Vertex", "Summit", "Cascade", "Beacon", "Horizon",
    "Keystone", "Frontier", "Lakeside", "Evergreen", "Northgate", "Redwood",
)
_CORP_SUFFIXES = ("LLC", "Inc", "Corp", "Group", "Holdings")

# Generic page boilerplate; deliberately disjoint from the planted key
# phrases so the only recurring neighborhoods are the ones we planted.
_BOILERPLATE = (
    "please", "retain", "this", "portion", "for", "your", "records",
    "questions", "call", "our", "office", "see", "reverse", "side",
    "detach", "here", "and", "return", "with", "enclosed", "form",
    "important", "notice", "keep", "copy", "page", "thank", "you",
    "visit", "online", "portal", "support", "center", "document",
    "continued", "overleaf", "terms", "apply", "subject", "change",
    "allow", "business", "days", "processing", "inquiries", "regarding",
    "may", "contact", "hours", "weekdays", "holidays", "excluded",
    "write", "address", "listed", "correspondence", "include", "stub",
    "payable", "money", "order", "do", "not", "send", "cash", "mail",
    "postage", "required", "additional", "fees", "assessed", "after",
    "failure", "receive", "does", "relieve", "obligation", "remit",
    "read", "carefully", "before", "signing", "retain", "duplicate",
    "electronic", "submission", "preferred", "paper", "accepted",
)


@dataclass(frozen=True)
class NoiseSpec:
    distractor_token_rate: float = 0.10
    phrase_dropout_rate: float = 0.10
    top_distractors: bool = True


@dataclass(frozen=True)
class TemplateSpec:
    kind: str
    column_headers: tuple[str, ...] = ()
    jitter: float = 0.004

    def __post_init__(self):
        if self.kind not in TEMPLATE_KINDS:
            raise ValueError(f"unknown template kind {self.kind!r}")
        if not 0.0 <= self.jitter < LINE_HEIGHT / 2:
            raise ValueError(
                f"jitter {self.jitter} must stay below half the line height "
                f"({LINE_HEIGHT / 2}) so lines remain separable"
            )
        object.__setattr__(self, "column_headers", tuple(self.column_headers))


@dataclass(frozen=True)
class CorpusSpec:
    name: str
    schema: FieldSchema
    templates: tuple[TemplateSpec, ...]
    field_frequency: dict[str, float]
    phrase_bank: dict[str, tuple[str, ...]]
    contradictory_groups: tuple[tuple[str, ...], ...] = ()
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))
        object.__setattr__(
            self,
            "contradictory_groups",
            tuple(tuple(g) for g in self.contradictory_groups),
        )
        problems = self.problems()
        if problems:
            raise ValueError("invalid corpus spec: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not self.templates:
            out.append("at least one template required")
        names = set(self.schema.names())
        for fname in self.field_frequency:
            if fname not in names:
                out.append(f"frequency for unknown field {fname!r}")
        for fname, freq in self.field_frequency.items():
            if not 0.0 < freq <= 1.0:
                out.append(f"frequency for {fname!r} must be in (0, 1]")
        for fname, phrases in self.phrase_bank.items():
            if fname not in names:
                out.append(f"phrase bank entry for unknown field {fname!r}")
        for spec in self.schema.fields:
            if not spec.expects_key_phrase and self.phrase_bank.get(spec.name):
                out.append(
                    f"field {spec.name!r} expects no key phrase but has "
                    "phrase bank entries"
                )
        for group in self.contradictory_groups:
            if len(group) != 2:
                out.append(f"contradictory group {group} must have 2 fields")
                continue
            banks = []
            for fname in group:
                if fname not in names:
                    out.append(f"contradictory group names unknown field {fname!r}")
                else:
                    banks.append(tuple(self.phrase_bank.get(fname, ())))
            if len(banks) == 2 and banks[0] != banks[1]:
                out.append(f"contradictory group {group} phrases differ")
        return out

    def frequency(self, field_name: str) -> float:
        return self.field_frequency.get(field_name, 1.0)

    def grouped_fields(self) -> set[str]:
        return {f for g in self.contradictory_groups for f in g}


def _token_width(text: str) -> float:
    return min(0.008 + 0.0072 * len(text), 0.30)


@dataclass
class _Line:
    y: float
    tokens: list  # (x, text, marker) with marker = (value_id, field) or None


class _DocPlan:
    def __init__(self, rng, jitter: float):
        self.rng = rng
        self.jitter = jitter
        self.lines: list[_Line] = []
        self._next_value_id = 0

    def new_marker(self, field_name: str):
        self._next_value_id += 1
        return (self._next_value_id, field_name)

    def add_line(self, y: float, entries) -> None:
        self.lines.append(_Line(y, list(entries)))

    def layout_row(self, texts, x_start: float, marker=None):
        """Left-to-right placement; returns the entries and the end x."""
        entries = []
        x = x_start
        for text in texts:
            entries.append((x, text, marker))
            x += _token_width(text) + _TOKEN_GAP
        return entries, x - _TOKEN_GAP

    def right_aligned(self, texts, right_edge: float, marker=None):
        total = sum(_token_width(t) for t in texts)
        total += _TOKEN_GAP * (len(texts) - 1)
        return self.layout_row(texts, right_edge - total, marker)[0]

    def token_count(self) -> int:
        return sum(len(line.tokens) for line in self.lines)

    def max_y(self) -> float:
        return max((line.y for line in self.lines), default=0.0)

    def render(self, doc_id: str, domain_tag: str) -> Document:
        ordered = sorted(
            self.lines, key=lambda ln: (ln.y, min(x for x, _, _ in ln.tokens))
        )
        tokens: list[Token] = []
        span_tokens: dict[tuple, list[int]] = {}
        for line_id, line in enumerate(ordered):
            for x, text, marker in sorted(line.tokens, key=lambda e: e[0]):
                w = _token_width(text)
                jx = float(self.rng.uniform(-self.jitter, self.jitter))
                jy = float(self.rng.uniform(-self.jitter, self.jitter))
                box = Box(
                    x=min(max(x + jx, 0.0), 1.0 - w),
                    y=min(max(line.y - LINE_HEIGHT / 2 + jy, 0.0), 1.0 - LINE_HEIGHT),
                    w=w,
                    h=LINE_HEIGHT,
                )
                index = len(tokens)
                tokens.append(Token(text=text, box=box, line_id=line_id, index=index))
                if marker is not None:
                    span_tokens.setdefault(marker, []).append(index)
        annotations = []
        for (value_id, field_name), idxs in sorted(span_tokens.items()):
            if idxs != list(range(idxs[0], idxs[-1] + 1)):
                raise AssertionError(
                    f"value tokens for {field_name} not contiguous: {idxs}"
                )
            annotations.append(FieldSpan(field_name, idxs[0], idxs[-1] + 1))
        annotations.sort(key=lambda s: (s.start, s.field))
        return Document(
            doc_id=doc_id,
            tokens=tuple(tokens),
            annotations=tuple(annotations),
            domain_tag=domain_tag,
        )


# ---------------------------------------------------------------------------
# Value grammars.  Each emits token texts the candidate annotators parse back.


def _amount_tokens(rng, lo: int, hi: int) -> list[str]:
    dollars = int(rng.integers(lo, hi))
    cents = int(rng.integers(0, 100))
    text = f"{dollars:,}.{cents:02d}"
    if rng.random() < 0.8:
        text = "$" + text
    return [text]


def _date_tokens(rng) -> list[str]:
    year = int(rng.integers(2019, 2026))
    month = int(rng.integers(1, 13))
    day = int(rng.integers(1, 29))
    form = int(rng.integers(0, 3))
    if form == 0:
        return [f"{month:02d}/{day:02d}/{year}"]
    if form == 1:
        return [f"{year}-{month:02d}-{day:02d}"]
    return [_MONTH_NAMES[month - 1], f"{day},", str(year)]


def _number_tokens(rng, digits_lo: int = 5, digits_hi: int = 9) -> list[str]:
    digits = int(rng.integers(digits_lo, digits_hi + 1))
    lo = 10 ** (digits - 1)
    return [str(int(rng.integers(lo, lo * 10)))]


def _address_tokens(rng) -> list[str]:
    toks = [
        str(int(rng.integers(100, 9999))),
        str(rng.choice(_STREET_NAMES)),
        str(rng.choice(_STREET_SUFFIXES)),
    ]
    if rng.random() < 0.6:
        toks.append(str(rng.choice(_CITIES)))
    if rng.random() < 0.25:
        toks.append("Suite")
        toks.append(str(int(rng.integers(100, 999))))
    return toks


def _name_tokens(rng) -> list[str]:
    if rng.random() < 0.55:
        return [str(rng.choice(_FIRST_NAMES)), str(rng.choice(_LAST_NAMES))]
    return [
        str(rng.choice(_CORP_WORDS)),
        str(rng.choice(_CORP_WORDS)),
        str(rng.choice(_CORP_SUFFIXES)),
    ]


def _value_tokens(rng, base_type: str, size_hint: str = "small") -> list[str]:
    if base_type == "amount":
        if size_hint == "big":
            return _amount_tokens(rng, 10_000, 500_000)
        return _amount_tokens(rng, 100, 10_000)
    if base_type == "date":
        return _date_tokens(rng)
    if base_type == "number":
        return _number_tokens(rng)
    if base_type == "address":
        return _address_tokens(rng)
    if base_type == "name":
        return _name_tokens(rng)
    return ["n/a"]


# ---------------------------------------------------------------------------
# Document assembly.

_TABLE_PHRASE_RIGHT = 0.25
_TABLE_COL1_X = 0.29
_TABLE_COL2_X = 0.42
_TABLE_ROW_DY = 0.088
_TABLE_MAX_ROWS = 8
_KEY_VALUE_GAPS = (0.02, 0.08, 0.16)
# Fields without key phrases stack into one tight header block so that
# each value's nearest context is other ground truth (which phrase
# inference excludes), not free-floating boilerplate.
_CORNER_X = 0.06
_CORNER_Y0 = 0.045
_CORNER_DY = 0.04


def _pick_phrase(rng, phrases) -> list[str] | None:
    if not phrases:
        return None
    phrase = str(phrases[int(rng.integers(0, len(phrases)))])
    toks = phrase.split()
    if rng.random() < 0.3:
        toks[-1] = toks[-1] + ":"
    return toks


def _build_document(spec: CorpusSpec, index: int) -> Document:
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, index)))
    include = {
        f.name: bool(rng.random() < spec.frequency(f.name))
        for f in spec.schema.fields
    }
    template = spec.templates[int(rng.integers(0, len(spec.templates)))]
    plan = _DocPlan(rng, template.jitter)
    grouped = spec.grouped_fields()

    corner_fields = [
        f for f in spec.schema.fields
        if not f.expects_key_phrase and f.base_type in ("name", "address")
    ]
    for slot, fspec in enumerate(corner_fields):
        y = _CORNER_Y0 + _CORNER_DY * slot
        if not include[fspec.name]:
            continue
        marker = plan.new_marker(fspec.name)
        entries, _ = plan.layout_row(
            _value_tokens(rng, fspec.base_type), _CORNER_X, marker
        )
        plan.add_line(y, entries)

    cursor = 0.115
    if corner_fields:
        cursor = _CORNER_Y0 + _CORNER_DY * len(corner_fields) + 0.16
    ungrouped = [
        f for f in spec.schema.fields
        if f.name not in grouped and f not in corner_fields
    ]
    for fspec in ungrouped:
        if not include[fspec.name]:
            continue
        phrase = None
        if fspec.expects_key_phrase:
            dropped = rng.random() < spec.noise.phrase_dropout_rate
            phrase = _pick_phrase(rng, spec.phrase_bank.get(fspec.name, ()))
            if dropped:
                phrase = None
        marker = plan.new_marker(fspec.name)
        value = _value_tokens(rng, fspec.base_type)
        above = (
            template.kind == "key_above_value"
            or fspec.base_type in ("name", "address")
        )
        if phrase is None:
            entries, _ = plan.layout_row(value, 0.06, marker)
            plan.add_line(cursor, entries)
            cursor += 0.055
        elif above:
            head, _ = plan.layout_row(phrase, 0.06)
            plan.add_line(cursor, head)
            entries, _ = plan.layout_row(value, 0.06, marker)
            plan.add_line(cursor + 0.045, entries)
            cursor += 0.045 + 0.05
        else:
            head, end_x = plan.layout_row(phrase, 0.06)
            gap = _KEY_VALUE_GAPS[int(rng.integers(0, len(_KEY_VALUE_GAPS)))]
            entries, _ = plan.layout_row(value, end_x + gap, marker)
            plan.add_line(cursor, head + entries)
            cursor += 0.05

    if spec.contradictory_groups:
        cursor = _build_table(spec, plan, rng, include, template, cursor)

    _add_distractors(spec, plan, rng)
    return plan.render(f"{spec.name}-{index:05d}", spec.name)


def _build_table(spec, plan, rng, include, template, cursor) -> float:
    rows = []
    for group in spec.contradictory_groups:
        members = [f for f in group if include[f]]
        if members:
            rows.append(group)
    if len(rows) > _TABLE_MAX_ROWS:
        # Keep the most frequent rows so the page never overflows.
        rows.sort(key=lambda g: -max(spec.frequency(f) for f in g))
        rows = rows[:_TABLE_MAX_ROWS]
    order = rng.permutation(len(rows))
    rows = [rows[int(i)] for i in order]
    if not rows:
        return cursor

    col_shift = float(rng.uniform(-0.025, 0.025))
    col_x = (_TABLE_COL1_X + col_shift, _TABLE_COL2_X + col_shift)
    headers = template.column_headers or ("Current", "YTD")
    header_y = cursor + 0.06
    entries = []
    for cx, header in zip(col_x, headers):
        entries.extend(plan.layout_row([header], cx + 0.012)[0])
    plan.add_line(header_y, entries)

    y = header_y + _TABLE_ROW_DY
    for group in rows:
        entries = []
        if rng.random() >= spec.noise.phrase_dropout_rate:
            phrase = _pick_phrase(rng, spec.phrase_bank.get(group[0], ()))
            if phrase:
                entries.extend(plan.right_aligned(phrase, _TABLE_PHRASE_RIGHT))
        for col, field_name in enumerate(group):
            if not include[field_name]:
                continue
            marker = plan.new_marker(field_name)
            size_hint = "big" if col == 1 else "small"
            base_type = spec.schema.field(field_name).base_type
            value = _value_tokens(rng, base_type, size_hint)
            entries.extend(plan.layout_row(value, col_x[col], marker)[0])
        if entries:
            plan.add_line(y, entries)
            y += _TABLE_ROW_DY
    return y


def _add_distractors(spec, plan, rng) -> None:
    rate = spec.noise.distractor_token_rate
    if rate <= 0.0:
        return
    target = int(round(rate / max(1.0 - rate, 1e-9) * plan.token_count()))
    top_slots = [0.025, 0.06, 0.095] if spec.noise.top_distractors else []
    bottom_start = max(plan.max_y() + 0.05, 0.72)
    bottom_slots = []
    y = bottom_start
    while y < 0.97:
        bottom_slots.append(y)
        y += 0.045
    slots = top_slots + bottom_slots
    placed = 0
    for y in slots:
        if placed >= target:
            break
        n_words = int(rng.integers(2, 5))
        words = [str(rng.choice(_BOILERPLATE)) for _ in range(n_words)]
        x = float(rng.uniform(0.06, 0.45))
        entries, _ = plan.layout_row(words, x)
        plan.add_line(y, entries)
        placed += n_words


def generate_corpus(spec: CorpusSpec, count: int) -> list[Document]:
    """Deterministic corpus of ``count`` documents for the spec.

    Shards may be generated concurrently: document i depends only on
    (spec.seed, i).
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    problems = spec.problems()
    if problems:
        raise ValueError("invalid corpus spec: " + "; ".join(problems))
    return [_build_document(spec, i) for i in range(count)]


# ---------------------------------------------------------------------------
# Built-in specs.

_EARNINGS_ROWS = (
    ("salary", ("Base Salary", "Base Pay", "Salary"), 0.95),
    ("overtime", ("Overtime", "Overtime Pay"), 0.80),
    ("bonus", ("Bonus", "Bonus Pay"), 0.70),
    ("vacation", ("Vacation Pay", "Vacation"), 0.60),
    ("commission", ("Commission", "Commissions"), 0.50),
    ("holiday", ("Holiday Pay", "Holiday"), 0.40),
    ("pto", ("PTO", "PTO Pay"), 0.20),
    ("incentive", ("Incentive Pay", "Incentive"), 0.20),
    ("sales", ("Sales Pay", "Sales"), 0.15),
    ("severance", ("Severance", "Severance Pay"), 0.12),
)


def _synth_earnings() -> CorpusSpec:
    fields = []
    frequency = {}
    bank = {}
    groups = []
    for key, phrases, freq in _EARNINGS_ROWS:
        pair = (f"current.{key}", f"ytd.{key}")
        for fname in pair:
            fields.append(FieldSpec(fname, "amount"))
            frequency[fname] = freq
            bank[fname] = phrases
        groups.append(pair)
    fields.append(FieldSpec("pay_date", "date"))
    frequency["pay_date"] = 0.95
    bank["pay_date"] = ("Pay Date",)
    fields.append(FieldSpec("employee_id", "number"))
    frequency["employee_id"] = 0.70
    bank["employee_id"] = ("Employee ID",)
    return CorpusSpec(
        name="synth-earnings",
        schema=FieldSchema(tuple(fields)),
        templates=(TemplateSpec("two_column_table", ("Current", "YTD")),),
        field_frequency=frequency,
        phrase_bank=bank,
        contradictory_groups=tuple(groups),
        seed=11,
    )


def _synth_bills() -> CorpusSpec:
    rows = (
        ("statement_date", "date", ("Statement Date",), 0.90),
        ("due_date", "date", ("Due Date", "Payment Due"), 0.85),
        ("amount_due", "amount", ("Amount Due", "Total Due"), 0.95),
        ("balance", "amount", ("Previous Balance", "Balance"), 0.60),
        ("late_fee", "amount", ("Late Fee",), 0.30),
        ("account_number", "number", ("Account Number", "Account No"), 0.90),
        ("service_address", "address", ("Service Address",), 0.70),
        ("customer_name", "name", ("Customer",), 0.50),
    )
    return CorpusSpec(
        name="synth-bills",
        schema=FieldSchema(tuple(FieldSpec(n, t) for n, t, _, _ in rows)),
        templates=(
            TemplateSpec("key_left_value_right"),
            TemplateSpec("key_above_value"),
        ),
        field_frequency={n: f for n, _, _, f in rows},
        phrase_bank={n: p for n, _, p, _ in rows},
        seed=23,
    )


def _synth_invoices() -> CorpusSpec:
    rows = (
        ("invoice_date", "date", ("Invoice Date", "Date"), 0.95),
        ("due_date", "date", ("Due Date",), 0.70),
        ("invoice_number", "number", ("Invoice Number", "Invoice No"), 0.95),
        ("po_number", "number", ("PO Number",), 0.40),
        ("subtotal", "amount", ("Subtotal",), 0.80),
        ("tax", "amount", ("Sales Tax", "Tax"), 0.70),
        ("total_due", "amount", ("Total Due", "Amount Due", "Total"), 0.95),
        ("shipping", "amount", ("Shipping", "Freight"), 0.50),
        ("vendor_address", "address", ("Remit To",), 0.60),
        ("customer_name", "name", ("Bill To",), 0.60),
    )
    return CorpusSpec(
        name="synth-invoices-ood",
        schema=FieldSchema(tuple(FieldSpec(n, t) for n, t, _, _ in rows)),
        templates=(
            TemplateSpec("key_left_value_right"),
            TemplateSpec("key_above_value"),
        ),
        field_frequency={n: f for n, _, _, f in rows},
        phrase_bank={n: p for n, _, p, _ in rows},
        seed=5,
    )


def _synth_nophrase() -> CorpusSpec:
    # Names and addresses interleave in one dense header block: phrase
    # inference for these fields must be defeated by ground-truth
    # exclusion, so their neighborhoods are kept ground-truth heavy.
    fields = (
        FieldSpec("company_name", "name", expects_key_phrase=False),
        FieldSpec("company_address", "address", expects_key_phrase=False),
        FieldSpec("signer_name", "name", expects_key_phrase=False),
        FieldSpec("signer_address", "address", expects_key_phrase=False),
        FieldSpec("contact_name", "name", expects_key_phrase=False),
        FieldSpec("mailing_address", "address", expects_key_phrase=False),
        FieldSpec("agent_name", "name", expects_key_phrase=False),
        FieldSpec("agent_address", "address", expects_key_phrase=False),
        FieldSpec("filing_date", "date"),
        FieldSpec("file_number", "number"),
    )
    return CorpusSpec(
        name="synth-nophrase",
        schema=FieldSchema(fields),
        templates=(TemplateSpec("key_left_value_right"),),
        field_frequency={
            "company_name": 0.95,
            "company_address": 0.92,
            "signer_name": 0.92,
            "signer_address": 0.90,
            "contact_name": 0.90,
            "mailing_address": 0.92,
            "agent_name": 0.90,
            "agent_address": 0.92,
            "filing_date": 0.80,
            "file_number": 0.70,
        },
        phrase_bank={
            "filing_date": ("Date Filed",),
            "file_number": ("File Number",),
        },
        noise=NoiseSpec(top_distractors=False),
        seed=31,
    )


def builtin_specs() -> dict[str, CorpusSpec]:
    specs = (_synth_earnings(), _synth_bills(), _synth_invoices(), _synth_nophrase())
    return {s.name: s for s in specs}


# ---------------------------------------------------------------------------
# Spec file format.

_SPEC_KEYS = {
    "name", "schema", "templates", "field_frequency", "phrase_bank",
    "contradictory_groups", "noise", "seed",
}


def spec_to_record(spec: CorpusSpec) -> dict:
    from .documents import schema_to_record

    return {
        "name": spec.name,
        "schema": schema_to_record(spec.schema),
        "templates": [
            {
                "kind": t.kind,
                "column_headers": list(t.column_headers),
                "jitter": t.jitter,
            }
            for t in spec.templates
        ],
        "field_frequency": dict(spec.field_frequency),
        "phrase_bank": {k: list(v) for k, v in spec.phrase_bank.items()},
        "contradictory_groups": [list(g) for g in spec.contradictory_groups],
        "noise": {
            "distractor_token_rate": spec.noise.distractor_token_rate,
            "phrase_dropout_rate": spec.noise.phrase_dropout_rate,
            "top_distractors": spec.noise.top_distractors,
        },
        "seed": spec.seed,
    }


def spec_from_record(record: dict) -> CorpusSpec:
    from .documents import schema_from_record

    _check_keys(record, _SPEC_KEYS, "corpus spec")
    noise_rec = record.get("noise", {})
    _check_keys(
        set(noise_rec),
        {"distractor_token_rate", "phrase_dropout_rate", "top_distractors"},
        "noise spec",
    )
    templates = []
    for t in record["templates"]:
        _check_keys(t, {"kind", "column_headers", "jitter"}, "template spec")
        templates.append(
            TemplateSpec(
                t["kind"],
                tuple(t.get("column_headers", ())),
                t.get("jitter", 0.004),
            )
        )
    return CorpusSpec(
        name=record["name"],
        schema=schema_from_record(record["schema"]),
        templates=tuple(templates),
        field_frequency=dict(record.get("field_frequency", {})),
        phrase_bank={
            k: tuple(v) for k, v in record.get("phrase_bank", {}).items()
        },
        contradictory_groups=tuple(
            tuple(g) for g in record.get("contradictory_groups", ())
        ),
        noise=NoiseSpec(
            noise_rec.get("distractor_token_rate", 0.10),
            noise_rec.get("phrase_dropout_rate", 0.10),
            noise_rec.get("top_distractors", True),
        ),
        seed=record.get("seed", 0),
    )


def with_seed(spec: CorpusSpec, seed: int) -> CorpusSpec:
    return replace(spec, seed=seed)
