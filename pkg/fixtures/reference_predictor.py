#!/usr/bin/env python3
"""Reference external predictor for the line-delimited JSON protocol.

Implements a stateless deterministic ensemble so the wire protocol can be
exercised without any ML dependency. Member e of the image model scores
an instance by its mean pixel intensity; the text model scores by token
count. Class probabilities are a logistic over that score with
member-specific slope/offset, so members disagree but stay deterministic.

Failure-injection flags (for client error-path tests):
  --malform N   reply with a non-JSON line to the N-th predict request
  --fail N      reply with a {"type": "error"} object to the N-th request
  --hang        never answer the handshake
  --crash N     exit(7) before answering the N-th predict request
"""

import argparse
import json
import math
import sys


def member_params(member):
    # Fixed spread of slopes/offsets; member 0 is the steepest.
    return 6.0 + 2.0 * member, 0.45 + 0.02 * member


def score(instance):
    if isinstance(instance, str):
        return min(1.0, len(instance.split()) / 16.0)
    pixels = instance["pixels"]
    return sum(pixels) / len(pixels) if pixels else 0.0


def probabilities(instance, member, n_members):
    s = score(instance)
    if member is None:
        acc = 0.0
        for e in range(n_members):
            slope, offset = member_params(e)
            acc += 1.0 / (1.0 + math.exp(-slope * (s - offset)))
        p1 = acc / n_members
    else:
        slope, offset = member_params(member)
        p1 = 1.0 / (1.0 + math.exp(-slope * (s - offset)))
    return [1.0 - p1, p1]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--members", type=int, default=3)
    parser.add_argument("--modality", choices=("image", "text"), default="image")
    parser.add_argument("--malform", type=int, default=0)
    parser.add_argument("--fail", type=int, default=0)
    parser.add_argument("--hang", action="store_true")
    parser.add_argument("--crash", type=int, default=0)
    args = parser.parse_args()

    if args.hang:
        sys.stdin.read()
        return

    predicts_seen = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        if request["type"] == "info":
            reply = {
                "type": "info",
                "n_classes": 2,
                "n_members": args.members,
                "modality": args.modality,
            }
        elif request["type"] == "predict":
            predicts_seen += 1
            if args.crash and predicts_seen == args.crash:
                print("synthetic crash", file=sys.stderr)
                sys.exit(7)
            if args.malform and predicts_seen == args.malform:
                print("this is not json", flush=True)
                continue
            if args.fail and predicts_seen == args.fail:
                reply = {
                    "type": "error",
                    "id": request.get("id"),
                    "message": "synthetic failure",
                }
                print(json.dumps(reply), flush=True)
                continue
            member = request.get("member")
            if member is not None and not 0 <= member < args.members:
                reply = {
                    "type": "error",
                    "id": request.get("id"),
                    "message": f"member {member} out of range",
                }
                print(json.dumps(reply), flush=True)
                continue
            reply = {
                "type": "result",
                "id": request.get("id"),
                "probabilities": [
                    probabilities(inst, member, args.members)
                    for inst in request["instances"]
                ],
            }
        else:
            reply = {
                "type": "error",
                "id": request.get("id"),
                "message": f"unknown request type {request['type']!r}",
            }
        print(json.dumps(reply), flush=True)


if __name__ == "__main__":
    main()
