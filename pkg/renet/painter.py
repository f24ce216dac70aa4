# Painter class - Wrapper for PyCairo library
# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

from typing import Sequence

import cairo
from colour import Color

from renet.colourpalette import ColourTheme


class Painter:
    """A wrapper class for PyCairo library"""

    width = 0
    height = 0
    last_drawn_y_pos = 0

    left_margin = 70
    right_margin = 30
    top_margin = 30
    bottom_margin = 50

    def __init__(self, width: int, height: int, colour_theme: str = "DEFAULT"):
        """__init__ method

        Args:
            width (int): Width of the surface
            height (int): Height of the surface
            colour_theme (str, optional): Theme name. Defaults to "DEFAULT".
        """
        self.width = width
        self.height = height
        self.last_drawn_y_pos = 0
        self.theme = ColourTheme(colour_theme)
        self.__surface = cairo.ImageSurface(cairo.FORMAT_ARGB32, width, height)
        self.__cr = cairo.Context(self.__surface)

    def set_colour(self, colour: str) -> None:
        """Set colour

        Args:
            colour (str): HTML color code. Eg. #FFFFFF or LightGreen
        """
        c = Color(colour)
        self.__cr.set_source_rgb(*c.get_rgb())

    def set_font(self, font: str, font_size: int, font_colour: str) -> None:
        """Configure text font settings

        Args:
            font (str): Font name. Eg. Arial
            font_size (int): Font size
            font_colour (str): Font colour in HTML colour name or hex code
        """
        self.__cr.select_font_face(font)
        self.__cr.set_font_size(font_size)
        self.set_colour(font_colour)

    def draw_text(self, x: float, y: float, text: str) -> None:
        self.__cr.move_to(x, y)
        self.__cr.show_text(text)

    def set_line_width(self, width: float) -> None:
        self.__cr.set_line_width(width)

    def set_line_style(self, style: str = "solid") -> None:
        """Set line style

        Args:
            style (str, optional): Line style. Defaults to "solid". Options: "solid", "dashed"
        """
        if style == "dashed":
            self.__cr.set_dash([10.0, 5.0])
        else:
            self.__cr.set_dash([])

    def draw_line(self, x1: float, y1: float, x2: float, y2: float) -> None:
        self.__cr.move_to(x1, y1)
        self.__cr.line_to(x2, y2)
        self.__cr.stroke()

    def draw_polyline(self, points: Sequence[tuple[float, float]]) -> None:
        """Stroke a connected line through the points; a single point is drawn as a dot"""
        if not points:
            return
        if len(points) == 1:
            x, y = points[0]
            self.__cr.arc(x, y, 2.5, 0, 6.283185307179586)
            self.__cr.fill()
            return
        self.__cr.move_to(*points[0])
        for point in points[1:]:
            self.__cr.line_to(*point)
        self.__cr.stroke()

    def get_text_dimension(self, text: str) -> tuple:
        """Get text dimension

        Args:
            text (str): Text that is used to calculate dimension

        Returns:
            (text_width, text_height): Text dimension
        """
        _, _, text_width, text_height, _, _ = self.__cr.text_extents(text)
        return text_width, text_height

    def set_background_colour(self) -> None:
        self.set_colour(self.theme.scheme.background_colour)
        self.__cr.paint()

    def save_surface(self, filename: str) -> None:
        """Save surface to PNG file

        Args:
            filename (str): PNG file name
        """
        self.__surface.write_to_png(filename)
