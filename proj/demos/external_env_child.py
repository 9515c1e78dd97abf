#!/usr/bin/env python3
"""Example evaluator for the external environment protocol.

Serves a 4-hyperparameter space over stdin/stdout:

    child  -> READY 4
    parent -> EVAL 1,0,2,1
    child  -> REWARD 2.5        (or ERROR <message>)

Plug it in with:
    remaade run --algo remaade --space dims=3,3,3,3 \
        --env "external:python3 demos/external_env_child.py" --budget 90 --batch 30
"""
import sys

N = 4


def score(values):
    # toy objective: agreement bonus plus a preference for value 2
    reward = sum(1.0 for v in values if v == 2)
    reward += 0.5 * sum(1.0 for a, b in zip(values, values[1:]) if a == b)
    return reward


def main():
    print(f"READY {N}", flush=True)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        if not line.startswith("EVAL "):
            print("ERROR unknown command", flush=True)
            continue
        try:
            values = [int(tok) for tok in line[5:].split(",")]
            if len(values) != N:
                raise ValueError(f"expected {N} values")
            print(f"REWARD {score(values)!r}", flush=True)
        except Exception as exc:  # report, keep serving
            print(f"ERROR {exc}", flush=True)


if __name__ == "__main__":
    main()
