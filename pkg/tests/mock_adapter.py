"""Minimal adapter process used by the protocol tests.

Modes:
  prompt DIR    answer prompt-segmenter requests with DIR/mask*.png
  semantic DIR  answer semantic-segmenter requests with DIR/semantic.png
  bad-id        reply with a wrong request id
  error         reply with an error payload
  garbage       reply with something that is not JSON
"""

import json
import sys


def main() -> None:
    mode = sys.argv[1]
    directory = sys.argv[2] if len(sys.argv) > 2 else ""
    for line in sys.stdin:
        request = json.loads(line)
        rid = request["id"]
        if mode == "prompt":
            masks = sorted(
                str(p) for p in __import__("pathlib").Path(directory).glob("mask*.png")
            )
            response = {"id": rid, "masks": masks, "scores": [0.9] * len(masks)}
        elif mode == "semantic":
            response = {
                "id": rid,
                "semantic": f"{directory}/semantic.png",
                "vocabulary": f"{directory}/vocabulary.json",
            }
        elif mode == "bad-id":
            response = {"id": rid + 1, "masks": [], "scores": []}
        elif mode == "error":
            response = {"id": rid, "error": "synthetic failure"}
        else:
            print("not json at all", flush=True)
            continue
        print(json.dumps(response), flush=True)


if __name__ == "__main__":
    main()
