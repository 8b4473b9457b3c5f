# %% [markdown]
# # Vega and gamma hedged spreads
#
# A vertical put spread (spot 135, write the 100 put, buy the 150 put) is
# made vega neutral, and a ratio write spread (spot 100, write the 120 put,
# buy the 100 put) is made gamma neutral and then delta hedged with stock.

# %%
from bateshoc import BatesParams, GridSpec
from bateshoc.analysis import SolveCache
from bateshoc.hedging import EXAMPLE_GAMMA, EXAMPLE_VEGA, gamma_write_spread, hedge_ratio, hedge_table

params = BatesParams()
cache = SolveCache(params, 0.5, GridSpec())

# %%
run = cache.get("hoc4", 0.05)
print("vega hedge: buy", round(hedge_ratio(EXAMPLE_VEGA, params, run), 4), "puts at 150 per written 100 put")
g = gamma_write_spread(EXAMPLE_GAMMA, params, run)
print("gamma hedge: buy", round(g["ratio"], 4), "puts at 100 per written 120 put;",
      "hold", round(g["underlying_qty"], 4), "shares; net theta", round(g["net_theta"], 4), "->", g["verdict"])

# %% [markdown]
# Percentage error of the ratio against each scheme's own h = 0.05 value.
# (The acceptance suite uses h = 0.025 as reference; 0.05 keeps this quick.)

# %%
for spec in (EXAMPLE_VEGA, EXAMPLE_GAMMA):
    rep = hedge_table(spec, params, [0.4, 0.2, 0.1], h_ref=0.05, cache=cache)
    for r in rep.rows:
        print(f"{spec.greek:5} {r.scheme:8} h={r.h:<4} ratio={r.ratio:.5f} error={r.pct_error:8.3f}%")
