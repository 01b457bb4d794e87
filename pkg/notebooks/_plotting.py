"""Optional matplotlib helper shared by the scripts in this directory."""
from pathlib import Path

OUT = Path(__file__).parent / "figures"


def figure():
    """Return ``(plt, save)``, or ``(None, None)`` when matplotlib is missing."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None, None

    def save(name):
        OUT.mkdir(exist_ok=True)
        plt.savefig(OUT / name, dpi=120, bbox_inches="tight")
        plt.close()
        print(f"saved {OUT / name}")

    return plt, save
