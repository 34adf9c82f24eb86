"""
Writers for trajectory, profile and sweep tables and their JSON sidecars
"""

import json
import logging
from pathlib import Path

import polars
from polars import DataFrame

from data.entities import Trajectory, WaveProfile


def make_path(out: str | Path, file_name: str, *parts: str) -> Path:
    """
    Creates the output path for a file, creating parent folders
    :param out: Output directory
    :param file_name: Name of the file
    :param parts: Optional sub folders
    :return: Path
    """
    folder = Path(out).joinpath(*parts)
    folder.mkdir(parents=True, exist_ok=True)
    return folder / file_name


def trajectory_frame(traj: Trajectory) -> DataFrame:
    """
    Trajectory samples as a frame with columns s, w, v, I
    :param traj: Trajectory
    :return: DataFrame
    """
    return DataFrame({'s': traj.s, 'w': traj.w, 'v': traj.v, 'I': traj.I})


def trajectory_sidecar(traj: Trajectory) -> dict:
    """
    JSON record {termination, s_minus, s_plus}
    :param traj: Trajectory
    :return: Dictionary
    """
    termination = traj.termination
    return {
        'termination': termination.to_dict() if termination else None,
        'lower': traj.lower.to_dict() if traj.lower else None,
        'upper': traj.upper.to_dict() if traj.upper else None,
        's_minus': traj.s_minus,
        's_plus': traj.s_plus,
    }


def profile_frame(profile: WaveProfile) -> DataFrame:
    """
    Profile samples as a frame with columns s, u, S
    :param profile: Profile
    :return: DataFrame
    """
    return DataFrame({'s': profile.s, 'u': profile.u, 'S': profile.S})


def profile_metadata(profile: WaveProfile) -> dict:
    """
    JSON metadata of a profile
    :param profile: Profile
    :return: Dictionary
    """
    slopes = profile.endpoint_slopes
    return {
        's_minus': profile.s_minus,
        's_plus': profile.s_plus,
        's0': profile.s0,
        'S0': profile.S0,
        'u0': profile.u0,
        'u_type': str(profile.u_type),
        'S_type': str(profile.S_type),
        'endpoint_slopes': slopes.to_dict() if slopes else None,
        'continuation_coefficients': profile.continuation,
    }


def write_csv(frame: DataFrame, path: Path) -> None:
    """
    Writes a frame as CSV with shortest round-trip float formatting
    :param frame: DataFrame
    :param path: Destination
    :return: None
    """
    frame.write_csv(path)
    logging.debug('Wrote %s rows to %s', frame.height, path)


def read_csv(path: Path) -> DataFrame:
    """
    Reads a CSV written by write_csv
    :param path: Source
    :return: DataFrame
    """
    return polars.read_csv(path)


def write_parquet(frame: DataFrame, path: Path) -> None:
    """
    Writes a frame as snappy-compressed parquet
    :param frame: DataFrame
    :param path: Destination
    :return: None
    """
    frame.write_parquet(path, compression='snappy')


def write_json(record: dict | list, path: Path) -> str:
    """
    Writes a JSON document with sorted keys so identical runs produce identical bytes
    :param record: Content
    :param path: Destination
    :return: The serialised text
    """
    text = json.dumps(record, indent=2, sort_keys=True)
    path.write_text(text + '\n')
    return text
