import csv
import logging
from pathlib import Path
from typing import Optional

from consts import SSIM_CSV_HEADER
from exceptions import StorageError
from metrics.exceptions import PairingError
from metrics.schemas import PairScore, SsimParams, SsimReport
from metrics.ssim import ssim
from services.png.png import png_read

logger = logging.getLogger(__name__)

MEAN_ROW_LABEL = "mean"


def _png_names(directory: Path) -> set[str]:
    if not Path(directory).is_dir():
        raise StorageError(f"{directory} is not a directory")
    return {path.name for path in Path(directory).glob("*.png")}


def evaluate_dir(
    generated_dir: Path, target_dir: Path, params: Optional[SsimParams] = None
) -> SsimReport:
    """Score every identically named PNG pair, in filename order.

    Raises:
        PairingError: If a file has no partner or no pairs exist.
    """
    generated = _png_names(generated_dir)
    targets = _png_names(target_dir)
    orphans = sorted(generated ^ targets)
    if orphans:
        raise PairingError(f"unmatched files: {', '.join(orphans)}")
    if not generated:
        raise PairingError(f"no PNG pairs in {generated_dir} and {target_dir}")

    pairs = []
    for name in sorted(generated):
        score = ssim(png_read(Path(generated_dir) / name, "RGB"), png_read(Path(target_dir) / name, "RGB"), params)
        logger.debug(f"SSIM {name}: {score:.6f}")
        pairs.append(PairScore(file=name, ssim=score))
    mean = sum(pair.ssim for pair in pairs) / len(pairs)
    logger.info(f"Evaluated {len(pairs)} pairs, mean SSIM {mean:.6f}")
    return SsimReport(pairs=pairs, mean=mean, count=len(pairs))


def write_ssim_csv(report: SsimReport, path: Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as stream:
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(SSIM_CSV_HEADER)
            for pair in report.pairs:
                writer.writerow([pair.file, f"{pair.ssim:.8f}"])
            writer.writerow([MEAN_ROW_LABEL, f"{report.mean:.8f}"])
    except OSError as error:
        raise StorageError(f"cannot write {path}: {error}") from error
    return path
