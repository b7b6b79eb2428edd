# p > n: a sparse beta and a handful of outliers, both under cardinality budgets.
import numpy as np

from piq import fit_piq, quadratic
from piq.simulate import SimSpec, default_config, evaluate, generate

spec = SimSpec.preset(3, n=200, p=300, o_star=10, seed=4)
inst = generate(spec)
config = default_config(spec)
print("budgets: q_gamma", config.q_gamma, "q_beta", config.q_beta, "beta update", config.beta_update)

fit = fit_piq(inst.data, quadratic(), config)
m = evaluate(fit, inst)
print("error on beta        ", round(m.err, 3))
print("true variables found ", m.jd_beta, "| selected", fit.support_beta.tolist())
print("all outliers flagged ", m.jd)
print("rho used             ", round(fit.metadata["rho"], 1))
# the beta budget cools from p to q_beta alongside the gamma budget
nnz = fit.diagnostics["nnz_beta"]
print("nonzero beta at t = 1, 100, 200:", nnz[0], nnz[99], nnz[199])
