"""Small shared constructors for the test modules."""

from kosmann.geometry import Chart, Grid, sample_points


def box_chart(n: int, name: str = "box", half: float = 1.0) -> Chart:
    coords = ("x", "y", "z", "w", "u", "v")[:n]
    return Chart(name, coords, [(-half, half)] * n)


def grid_on(chart: Chart, order: int = 3, npoints: int = 20, seed: int = 0,
            extra: int = 0) -> Grid:
    return Grid(chart, sample_points(chart.box, npoints, seed), order, extra)
