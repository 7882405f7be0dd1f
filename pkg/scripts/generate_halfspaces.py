import sys
from pathlib import Path

# Add parent directory to Python path
parent_dir = Path(__file__).parent.parent
sys.path.insert(0, str(parent_dir))

import click

from app.exceptions import SolverException
from app.schemas.geometry_schema import ConvexBody
from app.services.geometry_service import GeometryService

SHAPES = {
    "box": GeometryService.inscribe_box,
    "cross": GeometryService.inscribe_cross_polytope,
}


@click.command()
@click.option("--shape", type=click.Choice(sorted(SHAPES)), default="box", show_default=True)
@click.option("--semiaxes", required=True, help="Comma-separated semiaxes, e.g. 4,3,2")
@click.option("--center", default=None, help="Comma-separated center (defaults to the origin)")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def generate_halfspaces(shape, semiaxes, center, out_path):
    """Write an inscribed polyhedron as a halfspace file usable with approx = halfspaces:<file>"""
    print(f"📐 Building inscribed {shape} polyhedron...")

    try:
        axes = [float(token) for token in semiaxes.split(",")]
        origin = [float(token) for token in center.split(",")] if center else None
        body = ConvexBody.ellipsoid(axes, center=origin)
        poly = SHAPES[shape](body)
    except ValueError as e:
        raise click.BadParameter(str(e)) from e
    except SolverException as e:
        print(f"❌ {e.detail}")
        sys.exit(e.exit_code)

    hausdorff = GeometryService.hausdorff_estimate(body, poly).value if body.dim <= 3 else None

    print(f"📊 Polyhedron:")
    print(f"   Dimension: {poly.dim}")
    print(f"   Halfspaces: {poly.p}")
    print(f"   Stored vertices: {poly.s}")
    if hausdorff is not None:
        print(f"   Hausdorff distance: {hausdorff:.6g}")

    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"# {shape} inscribed in semiaxes {semiaxes}\n"
    path.write_text(header + GeometryService.polyhedron_to_text(poly))
    print(f"✅ Wrote {path}")


if __name__ == "__main__":
    generate_halfspaces()
