import logging
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np
from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.platypus import Image, PageBreak, Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

logger = logging.getLogger(__name__)

TABLE_STYLE = TableStyle([
    ("BACKGROUND", (0, 0), (-1, 0), colors.grey),
    ("TEXTCOLOR", (0, 0), (-1, 0), colors.whitesmoke),
    ("ALIGN", (0, 0), (-1, -1), "CENTER"),
    ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
    ("BOTTOMPADDING", (0, 0), (-1, 0), 10),
    ("GRID", (0, 0), (-1, -1), 1, colors.black),
])


# -------------------- Plots -------------------- #

def plot_pass_rate(series, file_path, predicted_q=None):
    """Pass rate against Q, with the predicted boundary as a dashed line when known."""
    os.makedirs(os.path.dirname(os.path.abspath(file_path)), exist_ok=True)
    plt.figure(figsize=(10, 6))
    plt.plot(series["num_samples"], 100.0 * series["pass_rate"], label="Pass rate (%)", marker="o", linestyle="-", color="green")
    if predicted_q is not None:
        plt.axvline(x=predicted_q, color="red", linestyle="--", label=f"Predicted bound Q={predicted_q}")
    plt.xlabel("Samples per period Q")
    plt.ylabel("Pass rate (%)")
    plt.title("Reconstruction pass rate vs Q")
    plt.ylim(-5, 105)
    plt.legend()
    plt.grid(True, linestyle="--", alpha=0.5)
    plt.tight_layout()
    plt.savefig(file_path)
    plt.close()
    logger.info("📊 pass-rate plot saved to %s", file_path)
    return file_path


def plot_rmse(series, file_path):
    os.makedirs(os.path.dirname(os.path.abspath(file_path)), exist_ok=True)
    finite = series.dropna()
    plt.figure(figsize=(10, 6))
    if not finite.empty:
        plt.semilogy(finite["amplitude_scale"], np.maximum(finite["rmse_median"], 1e-18),
                     label="Median relative RMSE", marker="o", linestyle="-", color="blue")
    plt.xlabel("Amplitude scale β (multiples of λ)")
    plt.ylabel("Relative RMSE")
    plt.title("Reconstruction error vs β")
    plt.legend()
    plt.grid(True, linestyle="--", alpha=0.5)
    plt.tight_layout()
    plt.savefig(file_path)
    plt.close()
    logger.info("📊 RMSE plot saved to %s", file_path)
    return file_path


def plot_reconstruction(folded, recovered, file_path, truth=None):
    """Real and imaginary parts of the folded record against the unfolded one."""
    os.makedirs(os.path.dirname(os.path.abspath(file_path)), exist_ok=True)
    threshold = folded.threshold
    times = recovered.times
    fig, axes = plt.subplots(2, 1, figsize=(12, 8), sharex=True)
    for axis, part, name in ((axes[0], np.real, "Real"), (axes[1], np.imag, "Imaginary")):
        if truth is not None:
            axis.plot(times, part(truth.samples), label="Ground truth", linestyle="-", color="grey", linewidth=3, alpha=0.5)
        axis.plot(times, part(recovered.samples), label="Recovered", marker="o", markersize=3, linestyle="-", color="green")
        axis.plot(times, part(folded.samples), label="Folded", marker=".", linestyle="none", color="orange")
        axis.axhline(y=threshold, color="red", linestyle="--", label=f"±λ = {threshold:g}")
        axis.axhline(y=-threshold, color="red", linestyle="--")
        axis.set_ylabel(f"{name} part")
        axis.grid(True, linestyle="--", alpha=0.5)
        axis.legend()
    axes[1].set_xlabel("Time")
    fig.suptitle("Modulo samples and reconstruction")
    fig.tight_layout()
    fig.savefig(file_path)
    plt.close(fig)
    logger.info("📊 reconstruction plot saved to %s", file_path)
    return file_path


# -------------------- PDF -------------------- #

def _frame_table(frame, columns, wrap_style):
    table_data = [columns]
    for _, row in frame[columns].iterrows():
        cells = []
        for column in columns:
            value = row[column]
            if isinstance(value, float):
                cells.append(f"{value:.3g}")
            else:
                cells.append(Paragraph(str(value), wrap_style))
        table_data.append(cells)
    table = Table(table_data, repeatRows=1)
    table.setStyle(TABLE_STYLE)
    return table


def create_sweep_pdf(summary, metadata, file_path, images=()):
    """Summary table, run metadata and embedded plots of a sweep.

    :param metadata: ordered mapping rendered as bold key/value lines
    :param images: PNG paths appended one per page
    """
    os.makedirs(os.path.dirname(os.path.abspath(file_path)), exist_ok=True)
    doc = SimpleDocTemplate(file_path, pagesize=A4, invariant=1)
    styles = getSampleStyleSheet()
    wrap_style = ParagraphStyle("wrap_style", fontSize=9, leading=11, textColor=colors.black, wordWrap="CJK")
    title_style = ParagraphStyle("TitleStyle", parent=styles["Title"], fontSize=20, textColor=colors.darkblue, spaceAfter=12, alignment=1)
    header_style = ParagraphStyle("HeaderStyle", parent=styles["Heading2"], fontSize=16, textColor=colors.darkred, spaceAfter=10, alignment=TA_CENTER)
    bold_style = ParagraphStyle("BoldStyle", parent=styles["BodyText"], fontSize=11, textColor=colors.black)

    content = [Paragraph("Modulo FRFT Sweep Report", title_style), Spacer(1, 10)]
    for key, value in metadata.items():
        content.append(Paragraph(f"<b>{key}</b>: {value}", bold_style))
    content.append(Spacer(1, 12))

    content.append(Paragraph("Pass rate per cell", header_style))
    columns = ["alpha", "bandwidth_index", "amplitude_scale", "num_samples", "budget", "trials", "pass_rate", "rmse_median"]
    content.append(_frame_table(summary, columns, wrap_style))

    for image_path in images:
        content.append(PageBreak())
        content.append(Image(image_path, width=500, height=300))
        content.append(Spacer(1, 12))

    doc.build(content)
    logger.info("✅ sweep report saved to %s", file_path)
    return file_path
