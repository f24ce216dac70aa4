"""Desk-scale MNIST run: train the reduced model, report the test error and
render the training curves.

    python renet_example.py data/mnist
"""

import logging
import sys
from pathlib import Path

from renet.chart import plot_metrics
from renet.config import load_config
from renet.model import build_model
from renet.trainer import TrainOptions, evaluate, prepare_splits, read_metrics, train_loop

CONFIG_PATH = Path(__file__).with_name("configs") / "mnist_desk.yaml"
OUTPUT_DIR = Path("runs") / "mnist_desk"

# reduced model, 10k training samples
TARGET_TEST_ERROR = 0.03


def main() -> None:
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    data_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data") / "mnist"
    cfg = load_config(CONFIG_PATH)
    splits, _ = prepare_splits(cfg, data_dir)
    model = build_model(cfg)
    for line in model.describe():
        print(line)

    metrics = OUTPUT_DIR / "metrics.jsonl"
    options = TrainOptions(checkpoint=OUTPUT_DIR / "model.ckpt", metrics=metrics, resume=True)
    result = train_loop(model, splits, options)
    test = evaluate(model, splits.test)
    print(
        f"best epoch {result.best_epoch}: valid error {result.best_valid_error:.4f}, "
        f"test error {test.error_rate:.4f} (target <= {TARGET_TEST_ERROR})"
    )
    plot_metrics(read_metrics(metrics), OUTPUT_DIR / "curves.png", "ReNet on MNIST (desk scale)")


if __name__ == "__main__":
    main()
