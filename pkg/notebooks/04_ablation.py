# A small version of the ablation grid through the command-line entry point.
import os
import tempfile

from misa.cli import main

out = os.path.join(tempfile.mkdtemp(), "ablation")
small = ["--set", "d_h=12", "--set", "max_epochs=8", "--set", "activation=tanh", "--set", "dropout=0.0",
         "--set", "learning_rate=3e-3", "--set", "synth_n_train=128", "--set", "synth_t_max=5",
         # only language carries the label, so removing it should hurt most
         "--set", "synth_shared_v=0", "--set", "synth_shared_a=0", "--set", "synth_shared_l=3"]

# %% rows 1-4: full model and one modality removed at a time; 8-11: architecture variants
code = main(["ablate", "--preset", "mosi", "--synthetic", "--seed", "0", "--rows", "1,2,3,4,8,9,10,11",
             "--out", out, *small])
print("exit code", code)

# %% every row leaves a complete run directory behind
print(sorted(os.listdir(out)))
print(open(os.path.join(out, "row02", "config.txt")).read())
