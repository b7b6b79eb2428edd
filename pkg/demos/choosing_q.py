# Choosing the outlier budget on a grid with information criteria.
from piq import FitConfig, quadratic, tune_q
from piq.simulate import SimSpec, generate

spec = SimSpec.preset(1, n=200, p=5, o_star=20, gamma_magnitude=10.0, seed=0)
data = generate(spec).data
grid = [10, 20, 30, 40]

for criterion in ("sfpic", "pic", "pic0"):
    best, scores = tune_q(data, quadratic(), FitConfig(), grid, criterion=criterion)
    print(f"{criterion:6s} selects q = {best}")
    for g in scores:
        print(f"    q={g.q:3d}  loss {g.score.loss_term:9.2f}  penalty {g.score.penalty_term:8.2f}  total {g.score.total:9.2f}")

# with a weaker shift (5 instead of 10) the outliers sit close enough to the
# fitted plane that a smaller budget wins: the remaining ones are absorbed by beta
weak = generate(SimSpec.preset(1, n=200, p=5, o_star=20, seed=0)).data
best, _ = tune_q(weak, quadratic(), FitConfig(), grid)
print("shift 5: sfpic selects q =", best)
