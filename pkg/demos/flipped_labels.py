# Logistic regression with a block of flipped, high-leverage labels.
# Each flagged sample gets its own shift, which is the same as dropping it from the fit.
import numpy as np

from piq import fit_piq, logistic
from piq.simulate import SimSpec, clean_test_set, default_config, evaluate, generate

spec = SimSpec.preset(2, n=500, o_star=60, seed=3)
inst = generate(spec)
test = clean_test_set(spec, size=10_000, seed=99)

config = default_config(spec)  # blockwise solver, q = 90, logarithmic cooling
fit = fit_piq(inst.data, logistic(), config)
m = evaluate(fit, inst, test_set=test)
print("test misclassification", round(m.err, 3))
print("all outliers flagged  ", m.jd)
print("flagged inliers       ", round(100 * m.false_alarm, 1), "%")

# a plain logistic fit for comparison (no outlier budget)
plain = fit_piq(inst.data, logistic(), default_config(spec, q_gamma=0))
print("plain logistic error  ", round(evaluate(plain, inst, test_set=test).err, 3))
print("beta (first 4)        ", np.round(fit.beta[:4], 2), "truth", inst.beta_star[:4])
