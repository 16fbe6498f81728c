"""Offline Adblock-style filter list parsing and URL match decisions.

Supported subset: network blocking rules and ``@@`` exceptions with the
``third-party``/``~third-party``, resource-type (``image``, ``script``, ...)
and ``domain=`` options.  Element-hiding rules, comments, regex-literal rules
and rules carrying unknown options are counted and skipped, never guessed at.

Pattern syntax recognized inside a rule:

* ``*``   any span of characters
* ``^``   a separator: any char that is not alphanumeric or ``_-.%``,
          or the end of the URL
* ``|``   start anchor (first char) / end anchor (last char)
* ``||``  domain anchor: matches at the start of the host or right after a
          dot inside the host

Matching runs against the canonical URL string (lowercase scheme and host,
verbatim path and query).  Rule text gets its scheme/host region lowercased
at parse time, so host matching is effectively case-insensitive while path
matching stays case-sensitive; compile with ``lowercase_all=True`` to fold
the whole comparison to lowercase instead.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Union

from .corpus import (
    ImageRecord,
    PageRecord,
    ParsedUrl,
    is_cross_domain,
    second_level_domain,
)

__all__ = [
    "Decision",
    "RuleOptions",
    "FilterRule",
    "Skipped",
    "FilterSet",
    "MatchContext",
    "parse_rule",
    "compile_filters",
    "load_filter_file",
    "matches",
    "blck_feature",
]


class Decision(Enum):
    BLOCKED = "blocked"
    ALLOWLISTED = "allowlisted"
    NO_MATCH = "no_match"


@dataclass(frozen=True)
class RuleOptions:
    """Option gates attached to a rule.

    ``third_party``: None = no constraint, True = third-party requests only,
    False = first-party only.  ``image_type``: whether the rule applies to
    image requests (None when the rule has no resource-type options at all).
    Domain lists hold lowercased entries; an entry applies when it equals the
    page's second-level domain or is a subdomain of it.
    """

    third_party: Optional[bool] = None
    image_type: Optional[bool] = None
    include_domains: tuple[str, ...] = ()
    exclude_domains: tuple[str, ...] = ()


@dataclass(frozen=True)
class FilterRule:
    pattern: str
    is_exception: bool = False
    anchor_start: bool = False
    anchor_domain: bool = False
    anchor_end: bool = False
    options: RuleOptions = RuleOptions()
    raw: str = ""
    # longest literal run, lowercased; cheap containment pre-check
    quick_token: str = field(default="", compare=False)


@dataclass(frozen=True)
class Skipped:
    """A line the compiler understood well enough to know it must not use."""

    reason: str
    line: str


@dataclass(frozen=True)
class MatchContext:
    """Everything option gates need to know about one image request."""

    request_url: ParsedUrl
    page_sld: str
    is_third_party: bool
    resource_type: str = "image"


@dataclass(frozen=True)
class FilterSet:
    blocking: tuple[FilterRule, ...] = ()
    exceptions: tuple[FilterRule, ...] = ()
    skipped: int = 0
    skip_reasons: tuple[tuple[str, int], ...] = ()
    source_digest: Optional[str] = None
    lowercase_all: bool = False


_OPTIONS_RE = re.compile(r"\$(~?[\w-]+(?:=[^,\s]+)?(?:,~?[\w-]+(?:=[^,\s]+)?)*)$")

_TYPE_OPTIONS = frozenset({
    "image", "script", "stylesheet", "subdocument", "xmlhttprequest",
    "object", "object-subrequest", "ping", "websocket", "webrtc",
    "font", "media", "other",
})

_HOST_CHARS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.-")

_SEPARATOR_EXEMPT = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.%"
)


def parse_rule(line: str) -> Union[FilterRule, Skipped]:
    """Compile one physical line into a rule, or say why it was skipped.

    Skipping is an ordinary value: comments, headers, element-hiding rules,
    regex-literal rules and unknown options all land in ``Skipped`` with a
    reason tag, so list-wide statistics stay honest.
    """
    text = line.strip()
    if not text:
        return Skipped("blank", line)
    if text.startswith("!"):
        return Skipped("comment", line)
    if text.startswith("[") and text.endswith("]"):
        return Skipped("header", line)
    if "##" in text or "#@#" in text or "#?#" in text or "#$#" in text:
        return Skipped("element-hiding", line)

    is_exception = text.startswith("@@")
    body = text[2:] if is_exception else text

    options = RuleOptions()
    opt_match = _OPTIONS_RE.search(body) if "$" in body else None
    if opt_match:
        parsed = _parse_options(opt_match.group(1))
        if isinstance(parsed, Skipped):
            return Skipped(parsed.reason, line)
        options = parsed
        body = body[: opt_match.start()]

    if len(body) > 1 and body.startswith("/") and body.endswith("/"):
        return Skipped("regex-rule", line)

    anchor_domain = body.startswith("||")
    if anchor_domain:
        body = body[2:]
    anchor_start = not anchor_domain and body.startswith("|")
    if anchor_start:
        body = body[1:]
    anchor_end = body.endswith("|")
    if anchor_end:
        body = body[:-1]

    body = re.sub(r"\*{2,}", "*", body)
    if not anchor_start and not anchor_domain:
        body = body.lstrip("*")
    if not anchor_end:
        body = body.rstrip("*")
    if not body:
        # "||", "|", "*" and friends would match every URL; real lists never
        # mean that
        return Skipped("empty-pattern", line)

    body = _lowercase_host_region(body, anchor_domain)
    return FilterRule(
        pattern=body,
        is_exception=is_exception,
        anchor_start=anchor_start,
        anchor_domain=anchor_domain,
        anchor_end=anchor_end,
        options=options,
        raw=text,
        quick_token=_longest_literal(body).lower(),
    )


def _parse_options(option_text: str) -> Union[RuleOptions, Skipped]:
    third_party: Optional[bool] = None
    include: list[str] = []
    exclude: list[str] = []
    positive_types: set[str] = set()
    negative_types: set[str] = set()

    for option in option_text.split(","):
        name, _, value = option.partition("=")
        name = name.strip().lower()
        negated = name.startswith("~")
        if negated:
            name = name[1:]
        if name == "third-party":
            third_party = not negated
        elif name == "domain":
            if negated or not value:
                return Skipped("unsupported option: domain form", option)
            for entry in value.split("|"):
                entry = entry.strip().lower()
                if not entry:
                    continue
                if entry.startswith("~"):
                    exclude.append(entry[1:])
                else:
                    include.append(entry)
        elif name in _TYPE_OPTIONS:
            (negative_types if negated else positive_types).add(name)
        else:
            return Skipped(f"unsupported option: {name}", option)

    if set(include) & set(exclude):
        return Skipped("conflicting domain option", option_text)

    image_type: Optional[bool] = None
    if positive_types:
        image_type = "image" in positive_types
    elif negative_types:
        image_type = "image" not in negative_types

    return RuleOptions(
        third_party=third_party,
        image_type=image_type,
        include_domains=tuple(include),
        exclude_domains=tuple(exclude),
    )


def _lowercase_host_region(pattern: str, anchor_domain: bool) -> str:
    if anchor_domain:
        start = 0
    else:
        scheme_end = pattern.find("://")
        if scheme_end < 0 or scheme_end > 12:
            return pattern
        start = scheme_end + 3
        pattern = pattern[:start].lower() + pattern[start:]
    end = start
    while end < len(pattern) and pattern[end] in _HOST_CHARS:
        end += 1
    return pattern[:start] + pattern[start:end].lower() + pattern[end:]


def _longest_literal(pattern: str) -> str:
    best = ""
    for run in re.split(r"[\^\*]", pattern):
        if len(run) > len(best):
            best = run
    return best if len(best) >= 3 else ""


def compile_filters(lines: Iterable[str], lowercase_all: bool = False,
                    source_digest: Optional[str] = None) -> FilterSet:
    blocking: list[FilterRule] = []
    exceptions: list[FilterRule] = []
    reasons: dict[str, int] = {}
    skipped = 0
    for line in lines:
        parsed = parse_rule(line.rstrip("\n"))
        if isinstance(parsed, Skipped):
            if parsed.reason != "blank":
                skipped += 1
                reasons[parsed.reason] = reasons.get(parsed.reason, 0) + 1
            continue
        if lowercase_all:
            parsed = FilterRule(
                pattern=parsed.pattern.lower(),
                is_exception=parsed.is_exception,
                anchor_start=parsed.anchor_start,
                anchor_domain=parsed.anchor_domain,
                anchor_end=parsed.anchor_end,
                options=parsed.options,
                raw=parsed.raw,
                quick_token=parsed.quick_token,
            )
        (exceptions if parsed.is_exception else blocking).append(parsed)
    return FilterSet(
        blocking=tuple(blocking),
        exceptions=tuple(exceptions),
        skipped=skipped,
        skip_reasons=tuple(sorted(reasons.items())),
        source_digest=source_digest,
        lowercase_all=lowercase_all,
    )


def load_filter_file(path: str | Path, lowercase_all: bool = False) -> FilterSet:
    """Compile a filter list file; the file's SHA-256 is kept so reports can
    pin exactly which snapshot produced the blocked-or-not feature."""
    data = Path(path).read_bytes()
    return compile_filters(
        data.decode("utf-8", errors="replace").splitlines(),
        lowercase_all=lowercase_all,
        source_digest=hashlib.sha256(data).hexdigest(),
    )


def matches(filter_set: FilterSet, ctx: MatchContext) -> Decision:
    """Decide one request: exception rules trump blocking rules, and the
    outcome never depends on rule order."""
    for rule in filter_set.exceptions:
        if _rule_matches(rule, ctx, filter_set.lowercase_all):
            return Decision.ALLOWLISTED
    for rule in filter_set.blocking:
        if _rule_matches(rule, ctx, filter_set.lowercase_all):
            return Decision.BLOCKED
    return Decision.NO_MATCH


def _rule_matches(rule: FilterRule, ctx: MatchContext, lowercase_all: bool) -> bool:
    opts = rule.options
    if opts.image_type is False and ctx.resource_type == "image":
        return False
    if opts.third_party is not None and opts.third_party != ctx.is_third_party:
        return False
    if opts.include_domains and not any(
        _domain_applies(d, ctx.page_sld) for d in opts.include_domains
    ):
        return False
    if any(_domain_applies(d, ctx.page_sld) for d in opts.exclude_domains):
        return False

    url = str(ctx.request_url)
    if lowercase_all:
        url = url.lower()
    if rule.quick_token and rule.quick_token not in url.lower():
        return False
    host = ctx.request_url.host
    host_start = len(ctx.request_url.scheme) + 3 + (1 if ":" in host else 0)
    host_end = host_start + len(host)
    return _pattern_matches(rule, url, host_start, host_end)


def _domain_applies(entry: str, page_sld: str) -> bool:
    page = page_sld.lower()
    return entry == page or entry.endswith("." + page)


def _pattern_matches(rule: FilterRule, url: str, host_start: int, host_end: int) -> bool:
    if rule.anchor_start:
        starts: Iterable[int] = (0,)
    elif rule.anchor_domain:
        starts = [host_start] + [
            i + 1 for i in range(host_start, host_end) if url[i] == "."
        ]
    else:
        starts = range(len(url) + 1)
    for start in starts:
        if _match_from(rule.pattern, url, start, rule.anchor_end):
            return True
    return False


def _match_from(pattern: str, url: str, start: int, anchor_end: bool) -> bool:
    def rec(pi: int, ui: int) -> bool:
        while True:
            if pi == len(pattern):
                return ui == len(url) if anchor_end else True
            ch = pattern[pi]
            if ch == "*":
                for j in range(ui, len(url) + 1):
                    if rec(pi + 1, j):
                        return True
                return False
            if ch == "^":
                if ui < len(url):
                    if url[ui] not in _SEPARATOR_EXEMPT and rec(pi + 1, ui + 1):
                        return True
                    return False
                pi += 1  # zero-width separator at end of URL
                continue
            if ui < len(url) and url[ui] == ch:
                pi += 1
                ui += 1
                continue
            return False

    return rec(0, start)


def blck_feature(filter_set: FilterSet, image: ImageRecord, page: PageRecord,
                 mode: str = "naive") -> bool:
    """Would an ad-blocker running this list have stopped the image request?"""
    ctx = MatchContext(
        request_url=image.resolved_url,
        page_sld=second_level_domain(page.final_url.host, mode),
        is_third_party=is_cross_domain(page.final_url, image.resolved_url, mode),
        resource_type="image",
    )
    return matches(filter_set, ctx) is Decision.BLOCKED
