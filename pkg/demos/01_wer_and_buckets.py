"""Score transcription hypotheses against references and bucket them.

Walks through text normalization, the edit-distance word error rate
(WER) with its substitution/deletion/insertion split, and the ordinal
difficulty classes derived from WER.
"""

from sesame.corpus import (BucketSpec, bucketize, compute_wer,
                           normalize_text)

PAIRS = [
    ("The quick brown fox jumps over the lazy dog.",
     "the quick brown fox jumps over the lazy dog"),
    ("She sells seashells by the seashore.",
     "she sells sea shells by the sea shore"),
    ("It's a beautiful day in the neighborhood!",
     "its a beautiful day in the neighborhood"),
    ("Four score and seven years ago",
     "force core in several years ago"),
]


def main():
    buckets = BucketSpec()
    print(f"{len(buckets.upper_bounds)} difficulty classes, upper bounds "
          f"{list(buckets.upper_bounds)}\n")
    for reference, hypothesis in PAIRS:
        ref = normalize_text(reference)
        hyp = normalize_text(hypothesis)
        score = compute_wer(ref, hyp)
        cls = bucketize(score.value, buckets)
        print(f"ref: {reference}")
        print(f"hyp: {hypothesis}")
        print(f"     S={score.substitutions} D={score.deletions} "
              f"I={score.insertions} N={len(ref)} "
              f"WER={score.value:.3f} -> class {cls}\n")


if __name__ == "__main__":
    main()
