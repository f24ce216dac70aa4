# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Colour themes for training charts."""

from dataclasses import dataclass, field

DEFAULT_FONT = "Arial"
DEFAULT_TITLE_FONT_SIZE = 18
DEFAULT_SUBTITLE_FONT_SIZE = 12
DEFAULT_AXIS_FONT_SIZE = 11
DEFAULT_LEGEND_FONT_SIZE = 11


@dataclass(frozen=True)
class ChartScheme:
    """Fonts and colours of every chart component"""

    background_colour: str = "#FFFFFF"
    title_font_colour: str = "#000000"
    axis_font_colour: str = "#333333"
    axis_line_colour: str = "#000000"
    grid_line_colour: str = "#D9D9D9"
    marker_line_colour: str = "#000000"
    # train_nll, valid_nll, train_error, valid_error
    series_colours: tuple[str, ...] = ("#1F77B4", "#FF7F0E", "#2CA02C", "#D62728")
    font: str = DEFAULT_FONT
    title_font_size: int = DEFAULT_TITLE_FONT_SIZE
    subtitle_font_size: int = DEFAULT_SUBTITLE_FONT_SIZE
    axis_font_size: int = DEFAULT_AXIS_FONT_SIZE
    legend_font_size: int = DEFAULT_LEGEND_FONT_SIZE


_SCHEMES = {
    "DEFAULT": ChartScheme(),
    "GREYWOOF": ChartScheme(
        axis_font_colour="#666666",
        axis_line_colour="#666666",
        grid_line_colour="#E5E5E5",
        marker_line_colour="#666666",
        series_colours=("#333333", "#999999", "#555555", "#BBBBBB"),
    ),
    "BLUEMOUNTAIN": ChartScheme(
        title_font_colour="#1F3A5F",
        axis_font_colour="#1F3A5F",
        axis_line_colour="#1F3A5F",
        grid_line_colour="#DCE6F2",
        marker_line_colour="#39A5A7",
        series_colours=("#1F3A5F", "#4A90C2", "#24787A", "#39A5A7"),
    ),
    "ORANGEPEEL": ChartScheme(
        title_font_colour="#7A3B00",
        axis_line_colour="#7A3B00",
        grid_line_colour="#FBE3CC",
        marker_line_colour="#F28C28",
        series_colours=("#F28C28", "#B35900", "#FFB366", "#7A3B00"),
    ),
}


@dataclass
class ColourTheme:
    """Named colour theme; one of DEFAULT, GREYWOOF, BLUEMOUNTAIN, ORANGEPEEL"""

    name: str = "DEFAULT"
    scheme: ChartScheme = field(init=False)

    def __post_init__(self):
        key = self.name.upper()
        if key not in _SCHEMES:
            raise ValueError(
                f"Colour theme {self.name} not recognised. Options are {', '.join(_SCHEMES)}"
            )
        self.name = key
        self.scheme = _SCHEMES[key]

    def series_colour(self, index: int) -> str:
        colours = self.scheme.series_colours
        return colours[index % len(colours)]
