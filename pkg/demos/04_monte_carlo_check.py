# %% [markdown]
# # Cross-checking the PIDE against Monte Carlo
#
# The simulation uses log-Euler for the asset, full truncation for the
# variance and antithetic pairs.  The check point sigma0 = 0.01 sits close
# to the artificial lower variance boundary, so the PIDE grid starts lower
# there (L2 = 0.025) and uses h = 0.025.  Expect about a minute.

# %%
from bateshoc import BatesParams, ContractSpec, build_grid, solve_pide
from bateshoc.config import RunConfig
from bateshoc.greeks import evaluate_at, greek
from bateshoc.montecarlo import black_scholes_put, mc_price

params, contract = BatesParams(), ContractSpec()
spec = RunConfig().mc_grid()
run = solve_pide(params, contract, build_grid(spec), "hoc4")
pide = evaluate_at(greek("price", run, params, contract), 100.0, 0.01)
mc = mc_price(params, contract, 100.0, 0.01, n_paths=1_000_000, n_steps=250, seed=0, threads=4)
print(f"PIDE {pide:.5f}   MC {mc.price:.5f} +- {mc.stderr:.5f}   z = {(pide - mc.price) / mc.stderr:+.2f}")

# %% [markdown]
# With no jumps and an almost frozen variance the model is Black-Scholes.

# %%
bs_params = BatesParams(lam=0.0, sigma_v=1e-6, theta=0.04)
mc = mc_price(bs_params, contract, 100.0, 0.04, n_paths=400_000, n_steps=50, seed=1)
print(f"MC {mc.price:.5f} +- {mc.stderr:.5f}   Black-Scholes {black_scholes_put(100, 100, 0.5, 0.05, 0.2):.5f}")
