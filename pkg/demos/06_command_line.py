# %% [markdown]
# # Running experiments from config files
#
# Every experiment is also available through the `idslab` command. A run
# writes CSV and JSON files and caches them under a hash of the canonical
# config, so repeating a run replays it byte for byte.

# %%
import pathlib
import tempfile

from idslab import cli

config = """
[model]
dimension = 1
L = 512

[run]
E = 3
max_range = 10
"""

with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    (tmp / "ct.ini").write_text(config)
    code = cli.main(["ct-decay", "--config", str(tmp / "ct.ini"), "--out", str(tmp / "out"), "--no-cache"])
    print("exit status", code)
    print((tmp / "out" / "verdict.json").read_text())
    print((tmp / "out" / "ct_decay.csv").read_text())
