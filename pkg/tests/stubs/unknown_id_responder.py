"""Responder that answers every request under a wrong id."""

import json
import sys

PROTOCOL = "agreement-probe/1"

print(json.dumps({"protocol": PROTOCOL}), flush=True)
hello = sys.stdin.readline()
if hello and json.loads(hello).get("protocol") == PROTOCOL:
    for line in sys.stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        response = {"id": request["id"] + 1_000_000,
                    "logprobs": [0.0] * len(request["candidates"])}
        print(json.dumps(response), flush=True)
