"""Run the synthetic benchmark for every classifier on a few seeds."""
from ldsdict.experiment import CLASSIFIERS, ExperimentConfig, run_benchmark
from ldsdict.synthetic import SyntheticConfig

print("seed  " + "  ".join(f"{c:>12s}" for c in CLASSIFIERS))
for seed in range(3):
    syn = SyntheticConfig(seed=seed)
    accs = [run_benchmark(ExperimentConfig(classifier=c, seed=seed), syn).accuracy for c in CLASSIFIERS]
    print(f"{seed:4d}  " + "  ".join(f"{a:12.3f}" for a in accs))
