# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Render a metrics log (JSON lines) to a PNG training chart.

The chart has a title, an optional subtitle and two stacked panels: NLL
(train and validation) and error rate (train and validation) against the
epoch. A dashed marker shows the epoch selected on validation error.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from renet.painter import Painter

logger = logging.getLogger(__name__)

PANELS = (
    ("negative log-likelihood", ("train_nll", "valid_nll")),
    ("error rate", ("train_error", "valid_error")),
)
SERIES_ORDER = ("train_nll", "valid_nll", "train_error", "valid_error")


@dataclass()
class Title:
    """Chart title, centred at the top"""

    text: str
    font_size: int = 18
    subtitle: bool = False
    x: float = field(init=False, default=0)
    y: float = field(init=False, default=0)

    __GAP = 20

    def set_draw_position(self, painter: Painter) -> None:
        scheme = painter.theme.scheme
        painter.set_font(scheme.font, self.font_size, scheme.title_font_colour)
        width, height = painter.get_text_dimension(self.text)
        self.x = painter.width / 2 - width / 2
        if self.subtitle:
            self.y = painter.last_drawn_y_pos + self.__GAP
        else:
            self.y = painter.top_margin + height
        painter.last_drawn_y_pos = self.y

    def draw(self, painter: Painter) -> None:
        scheme = painter.theme.scheme
        painter.set_font(scheme.font, self.font_size, scheme.title_font_colour)
        painter.draw_text(self.x, self.y, self.text)


def _value_range(values: list[float]) -> tuple[float, float]:
    low, high = min(values), max(values)
    if high - low < 1e-12:
        pad = max(abs(high) * 0.1, 0.05)
        return low - pad, high + pad
    pad = (high - low) * 0.05
    return max(0.0, low - pad) if low >= 0 else low - pad, high + pad


@dataclass()
class Panel:
    """One set of axes with a series per metric"""

    label: str
    series: dict[str, list[tuple[int, float]]]
    x: float = 0
    y: float = 0
    width: float = 0
    height: float = 0
    ticks: int = 5

    def _scale(self, epochs: tuple[int, int], values: tuple[float, float]):
        first, last = epochs
        low, high = values
        span_x = max(last - first, 1)

        def to_canvas(epoch: float, value: float) -> tuple[float, float]:
            px = self.x + (epoch - first) / span_x * self.width
            py = self.y + self.height - (value - low) / (high - low) * self.height
            return px, py

        return to_canvas

    def draw(self, painter: Painter, epochs: tuple[int, int], best_epoch: Optional[int]) -> None:
        scheme = painter.theme.scheme
        values = [value for points in self.series.values() for _, value in points]
        if not values:
            return
        low, high = _value_range(values)
        to_canvas = self._scale(epochs, (low, high))

        painter.set_line_style("solid")
        painter.set_line_width(1)
        painter.set_font(scheme.font, scheme.axis_font_size, scheme.axis_font_colour)
        for tick in range(self.ticks + 1):
            value = low + (high - low) * tick / self.ticks
            _, py = to_canvas(epochs[0], value)
            painter.set_colour(scheme.grid_line_colour)
            painter.draw_line(self.x, py, self.x + self.width, py)
            painter.set_colour(scheme.axis_font_colour)
            text = f"{value:.3g}"
            text_width, text_height = painter.get_text_dimension(text)
            painter.draw_text(self.x - text_width - 8, py + text_height / 2, text)
        for epoch in sorted({epochs[0], epochs[1], (epochs[0] + epochs[1]) // 2}):
            px, _ = to_canvas(epoch, low)
            text = str(epoch)
            text_width, text_height = painter.get_text_dimension(text)
            painter.draw_text(px - text_width / 2, self.y + self.height + text_height + 6, text)

        painter.set_colour(scheme.axis_line_colour)
        painter.draw_line(self.x, self.y + self.height, self.x + self.width, self.y + self.height)
        painter.draw_line(self.x, self.y, self.x, self.y + self.height)
        painter.draw_text(self.x, self.y - 8, self.label)

        if best_epoch is not None:
            px, _ = to_canvas(best_epoch, low)
            painter.set_colour(scheme.marker_line_colour)
            painter.set_line_style("dashed")
            painter.draw_line(px, self.y, px, self.y + self.height)
            painter.set_line_style("solid")

        painter.set_line_width(2)
        legend_y = self.y + 4
        for name, points in self.series.items():
            colour = painter.theme.series_colour(SERIES_ORDER.index(name))
            painter.set_colour(colour)
            painter.draw_polyline([to_canvas(epoch, value) for epoch, value in points])
            painter.set_font(scheme.font, scheme.legend_font_size, colour)
            text_width, text_height = painter.get_text_dimension(name)
            legend_y += text_height + 6
            painter.draw_text(self.x + self.width - text_width - 6, legend_y, name)


@dataclass()
class TrainingChart:
    """Training curves of one run"""

    width: int = field(default=1000)
    height: int = field(default=700)
    colour_theme: str = field(default="DEFAULT")

    title: Optional[Title] = field(default=None, init=False)
    subtitle: Optional[Title] = field(default=None, init=False)
    records: list[dict] = field(default_factory=list, init=False)

    def __post_init__(self):
        self.__painter = Painter(self.width, self.height, self.colour_theme)

    def set_title(self, text: str, font_size: int = 18) -> None:
        self.title = Title(text, font_size)

    def set_subtitle(self, text: str, font_size: int = 12) -> None:
        self.subtitle = Title(text, font_size, subtitle=True)

    def add_records(self, records: list[dict]) -> None:
        """Append epoch records (keys epoch, train_nll, valid_nll, train_error, valid_error)"""
        for record in records:
            if "epoch" not in record:
                raise ValueError(f"Metrics record without an epoch: {record}")
            self.records.append(record)
        self.records.sort(key=lambda record: record["epoch"])

    @property
    def best_epoch(self) -> Optional[int]:
        """First epoch with the lowest validation error"""
        scored = [r for r in self.records if r.get("valid_error") is not None]
        if not scored:
            return None
        return min(scored, key=lambda r: (r["valid_error"], r["epoch"]))["epoch"]

    def draw(self) -> None:
        if self.title is None:
            raise ValueError("Title is not set. Please call set_title() to set the title.")
        if not self.records:
            raise ValueError("No metrics to plot. Please call add_records() first.")
        painter = self.__painter
        painter.set_background_colour()
        self.title.set_draw_position(painter)
        self.title.draw(painter)
        if self.subtitle is not None:
            self.subtitle.set_draw_position(painter)
            self.subtitle.draw(painter)

        epochs = (self.records[0]["epoch"], self.records[-1]["epoch"])
        top = painter.last_drawn_y_pos + 40
        plot_width = self.width - painter.left_margin - painter.right_margin
        panel_height = (self.height - top - painter.bottom_margin) / len(PANELS) - 40
        for index, (label, keys) in enumerate(PANELS):
            series = {
                key: [(r["epoch"], float(r[key])) for r in self.records if r.get(key) is not None]
                for key in keys
            }
            panel = Panel(
                label,
                {key: points for key, points in series.items() if points},
                x=painter.left_margin,
                y=top + index * (panel_height + 40),
                width=plot_width,
                height=panel_height,
            )
            panel.draw(painter, epochs, self.best_epoch)

    def save(self, filename: Union[str, Path]) -> None:
        self.__painter.save_surface(str(filename))
        logger.info("Saved training chart to %s", filename)


def plot_metrics(
    records: list[dict],
    output: Union[str, Path],
    title: str = "Training curves",
    subtitle: Optional[str] = None,
    colour_theme: str = "DEFAULT",
) -> TrainingChart:
    chart = TrainingChart(colour_theme=colour_theme)
    chart.set_title(title)
    if subtitle:
        chart.set_subtitle(subtitle)
    chart.add_records(records)
    chart.draw()
    chart.save(output)
    return chart
