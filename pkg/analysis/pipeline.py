"""Summarization pipeline: from a framework program to a store of summaries."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, TypeVar

from minifw.model import MethodDef, Program
from pcs_core import TOOL_NAME, __version__
from pcs_core.config import AnalysisConfig
from pcs_core.errors import Diagnostic, InvariantViolation, PcsError

from .callbacks import CallChain, CallSite, CallSiteSet, callback_signatures, find_call_chains, link_async_handlers
from .graphs import ICFG, CallGraph, CfgCache, build_call_graph, build_icfg
from .predicates import PredicateSet, find_predicates
from .receivers import normalize, resolve_receivers
from .store import SummaryStore
from .summary import PCS, CallbackPayload, Marks, NodeKind, generate_summary_graph
from .templates import TemplateTable, resolve_table
from .updates import UpdateNode, collect_pool, find_updates

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True, slots=True)
class ApiStats:
    """Size of one summary against its ICFG."""

    api: str
    icfg: int
    pcs: int
    callbacks: int
    predicates: int
    updates: int

    @property
    def reduction(self) -> float:
        return 1 - self.pcs / self.icfg if self.icfg else 0.0

    def tsv(self) -> str:
        return "\t".join(
            str(item) for item in (self.api, self.icfg, self.pcs, self.callbacks, self.predicates, self.updates)
        )


TSV_HEADER = "api\ticfg_nodes\tpcs_nodes\tcallbacks\tpredicates\tupdates"


@dataclass(slots=True)
class _ApiWork:
    api: MethodDef
    icfg: ICFG
    sites: dict[CallSite, list[CallChain]]
    callbacks: dict[tuple[str, int], CallbackPayload]
    predicates: PredicateSet
    updates: list[UpdateNode] = field(default_factory=list)


@dataclass(slots=True)
class SummarizeResult:
    store: SummaryStore
    stats: list[ApiStats]
    icfgs: dict[str, ICFG]
    marks: dict[str, Marks]
    call_graph: CallGraph
    call_sites: CallSiteSet
    diagnostics: list[Diagnostic] = field(default_factory=list)


def select_apis(program: Program, names: Optional[Sequence[str]] = None) -> list[MethodDef]:
    """API methods in declaration order, optionally restricted by key, ``Class.name`` or bare name."""

    apis = program.api_methods()
    if not names:
        return apis
    selected = []
    for name in names:
        matches = [api for api in apis if name in (api.key, api.qualified_name, api.name)]
        if not matches:
            raise PcsError(f"Unknown API method {name}")
        selected.extend(match for match in matches if match not in selected)
    return [api for api in apis if api in selected]


def map_jobs(jobs: int, func: Callable[[T], R], items: Iterable[T]) -> list[R]:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(func, items))


def summarize_program(
    program: Program,
    config: Optional[AnalysisConfig] = None,
    *,
    apis: Optional[Sequence[str]] = None,
    table: Optional[TemplateTable] = None,
    early_exit: bool = True,
) -> SummarizeResult:
    """Summarize every selected API method of ``program``."""

    config = config or AnalysisConfig()
    table = table or resolve_table(config.templates)
    cfgs = CfgCache(program)

    linked = link_async_handlers(program, build_call_graph(program))
    cg = linked.call_graph
    signatures = callback_signatures(program)
    call_sites = find_call_chains(program, cg, signatures, config.max_chain, config.max_callers, config.seed)
    skip = call_sites.nodes()
    selected = select_apis(program, apis)
    logger.info("Summarizing", extra={"apis": len(selected), "callback_sites": len(call_sites.sites)})

    def first_phase(api: MethodDef) -> _ApiWork:
        icfg = build_icfg(program, api, cg, max_depth=config.max_chain, skip=skip, cfgs=cfgs)
        sites = {
            site: [chain for chain in chains if all(method in icfg.members for method in chain.methods)]
            for site, chains in call_sites.for_api(api.key).items()
        }
        sites = {site: chains for site, chains in sites.items() if chains}
        resolutions = resolve_receivers(sites, cfgs, limit=config.access_path_limit, budget=config.query_budget)
        callbacks: dict[tuple[str, int], CallbackPayload] = {}
        for site in sorted(sites):
            receivers = normalize(item for res in resolutions if res.site == site for item in res.receivers)
            callbacks[site.node] = CallbackPayload(
                call_sites.signatures[site],
                tuple(sorted(receivers)),
                any(chain.is_async for chain in sites[site]),
            )
        predicates = find_predicates(
            sites, cfgs, limit=config.access_path_limit, budget=config.query_budget, max_terms=config.max_terms
        )
        return _ApiWork(api=api, icfg=icfg, sites=sites, callbacks=callbacks, predicates=predicates)

    works = map_jobs(config.jobs, first_phase, selected)
    pool = collect_pool(work.predicates for work in works)
    logger.debug("Predicate variable pool", extra={"variables": sorted(str(item) for item in pool)})

    def second_phase(work: _ApiWork) -> tuple[PCS, Marks]:
        work.updates = find_updates(
            work.icfg,
            pool,
            cfgs,
            table,
            limit=config.access_path_limit,
            budget=config.query_budget,
            early_exit=early_exit,
        )
        marks = Marks(
            callbacks=dict(work.callbacks),
            predicates={(loc.method, loc.sid): expr for loc, expr in sorted(work.predicates.expressions.items())},
        )
        for update in work.updates:
            marks.updates.setdefault(update.node, []).append(update)
        pcs = generate_summary_graph(work.icfg, marks)
        if len(pcs) > len(work.icfg):
            raise InvariantViolation(f"Summary of {pcs.api} is larger than its ICFG")
        return pcs, marks

    finished = map_jobs(config.jobs, second_phase, works)

    store = SummaryStore(metadata={**config.metadata(), "tool": TOOL_NAME, "tool_version": __version__})
    stats = []
    result_marks = {}
    for work, (pcs, marks) in zip(works, finished):
        store.summaries[pcs.api] = pcs
        result_marks[pcs.api] = marks
        stats.append(
            ApiStats(
                api=pcs.api,
                icfg=len(work.icfg),
                pcs=len(pcs),
                callbacks=len(pcs.of_kind(NodeKind.CALLBACK)),
                predicates=len(pcs.of_kind(NodeKind.PREDICATE)),
                updates=len(pcs.of_kind(NodeKind.UPDATE)),
            )
        )
    return SummarizeResult(
        store=store,
        stats=stats,
        icfgs={work.api.key: work.icfg for work in works},
        marks=result_marks,
        call_graph=cg,
        call_sites=call_sites,
        diagnostics=list(linked.diagnostics),
    )
