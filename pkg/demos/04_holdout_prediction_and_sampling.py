"""Predict difficulty for unseen utterances and sample the hardest.

Trains a model on a planted corpus, attaches a fresh holdout batch to
the frozen training graph (holdout nodes connect only to training
nodes), predicts each holdout utterance's class, and then draws a
fine-tuning sample that exhausts the hardest buckets first.
"""

import numpy as np

from sesame.gnn import GnnConfig, predict, train_gnn
from sesame.sampler import sample_difficult
from sesame.simgraph import build_graph, extend_graph
from sesame.synth import PlantedSpec, generate_planted


def main():
    spec = PlantedSpec(n=200, dim=24, seed=31)
    utterances, embeddings, _ = generate_planted(spec)
    labels = np.array([u.class_label for u in utterances], dtype=np.int16)

    # Train on the first 150 points; hold out the remaining 50.
    train_emb, hold_emb = embeddings[:150], embeddings[150:]
    graph = build_graph(train_emb, k=8, threshold=0.5, labels=labels[:150])
    model, _history = train_gnn(
        graph, GnnConfig(input_dim=spec.dim, k=spec.k, epochs=120, seed=31))

    extended = extend_graph(graph, hold_emb, k=8, threshold=0.5)
    _idx, classes, _scores = predict(model, extended)
    truth = labels[150:]
    print(f"holdout accuracy: {np.mean(classes == truth):.3f} "
          f"({len(truth)} utterances)")

    predictions = {utterances[150 + i].id: int(c)
                   for i, c in enumerate(classes)}
    result = sample_difficult(predictions, k=12, seed=31)
    print(f"sampled {len(result.selected)} hardest utterances; "
          f"boundary bucket {result.boundary_bucket}")
    print(f"taken per bucket: {result.per_bucket_taken}")
    print("first picks:", ", ".join(result.selected[:5]))


if __name__ == "__main__":
    main()
