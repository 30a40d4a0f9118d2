"""Hand transcription of the 38 shipped instances, in two-letter codes."""

from __future__ import annotations

CODES = {
    "RC": "red_3D_cuboid", "WC": "white_3D_cuboid", "YC": "yellow_3D_cuboid",
    "BY": "blue_3D_cylinder", "WY": "white_3D_cylinder", "NY": "brown_3D_cylinder", "GY": "green_3D_cylinder",
    "RP": "red_3D_polyhedron", "BR": "blue_2D_rectangle", "YR": "yellow_2D_rectangle",
    "TC": "transparent_2D_circle", "KL": "black_1D_line", "EL": "beige_1D_line", "AL": "gray_1D_line",
}

ROWS = """\
RC WC GY
RC WC KL RP NY
RC WY BR KL
RC YC BY YR NY
RC YC BY EL RP
RC YC WY YR AL
RC YC BR NY
RC BY WY BR YR AL NY
RC BY TC KL
RC BY EL NY GY
RC BY RP NY
RC WY TC EL RP GY
RC BR YR NY GY
WC YC BY BR EL
WC YC WY BR KL NY
WC YC WY YR NY
WC BY WY EL AL
WC BY BR AL
WC WY TC AL GY
WC WY EL RP NY
WC BR YR TC NY
WC AL RP GY
YC BY WY YR RP
YC BY BR TC RP GY
YC BY KL GY
YC WY TC AL NY
YC WY EL NY GY
YC BR KL RP GY
YC YR TC RP NY
BY WY TC KL RP GY
BY BR KL AL GY
WY BR YR TC RP NY
WY EL AL
WY KL RP
BR TC EL KL NY GY
YR EL KL AL
TC EL KL AL RP NY
TC KL RP GY
"""

SHIPPED = [tuple(CODES[c] for c in row.split()) for row in ROWS.splitlines()]

# 1-based instances with a plastic object and no compressible one
INFEASIBLE = {1, 9, 18, 31, 36}
