# %% [markdown]
# # Grid convergence of prices and Greeks
#
# Each scheme is compared with its own solution on a fine grid (h = 0.025)
# while the ratio k/h^2 is held fixed, and the error is fitted to C h^m.
# The fine solves take about a minute.

# %%
from bateshoc import BatesParams, ContractSpec, GridSpec
from bateshoc.analysis import H_REF, STUDY_H_LIST, SolveCache, run_convergence_study

params, contract = BatesParams(), ContractSpec()
cache = SolveCache(params, contract.T, GridSpec())
cache.prefetch([(s, h) for s in ("hoc4", "central2") for h in (*STUDY_H_LIST, H_REF)])

# %%
for quantity in ("price", "vega", "gamma"):
    for scheme in ("hoc4", "central2"):
        rep = run_convergence_study(scheme, quantity, STUDY_H_LIST, params, contract, h_ref=H_REF, cache=cache)
        errs = "  ".join(f"{e:.2e}" for _, e, _ in rep.rows)
        print(f"{quantity:6} {scheme:8} l2 errors {errs}  m_l2={rep.m_l2:.2f}  m_linf={rep.m_linf:.2f}")

# %% [markdown]
# The compact scheme gains roughly a factor 16 per halving on the finer grids;
# the h = 0.4 grid is still pre-asymptotic near the kink at low variance,
# which pulls the four-point fit below 4.
