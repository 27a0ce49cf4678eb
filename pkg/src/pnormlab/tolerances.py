"""Project-wide tolerance hierarchy.

The hierarchy is fixed so that norming-set decisions are strictly looser
than the numerics feeding them: unit-vector checks (tol_unit) < identity
checks (tol_eval) < "||S|| = 1" semantics (tol_norm) < membership in the
norming set (tol_norming). Support predicates share a single threshold
(supp_tol) so that disjointness, interval and sign checks stay mutually
consistent, and the dedup radius sits far above tol_norming because
distinct norming directions of the operators studied here are
geometrically separated while repeated optimizer hits jitter at ~1e-8.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    tol_unit: float = 1e-10
    tol_eval: float = 1e-9
    tol_norm: float = 1e-7
    tol_norming: float = 1e-6
    supp_tol: float = 1e-7
    cluster_radius: float = 1e-4
    rank_tol: float = 1e-8

    def replace(self, **kw) -> "Tolerances":
        from dataclasses import replace

        return replace(self, **kw)


DEFAULT = Tolerances()
