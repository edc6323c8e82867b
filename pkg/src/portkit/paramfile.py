"""A module for reading YAML configuration files.

Two kinds of YAML file are used:

    - parameter files, mapping parameter names to numbers, passed to the CLI
      with --params to override a manifest's "param" lines, e.g.

          HAND_REACHABLE: 0.35
          DESIRED_TIME: 3.0

    - the scenario index (index.yaml in the scenario directory), listing the
      documented duration and seed of each shipped scenario, e.g.

          search_and_track:
            duration: 6.0
            seed: 7

Example:
    params = parse_paramfile("overrides.yaml")
"""

import yaml

from portkit.utils import PARAMETER_NAME


def parse_paramfile(paramfile):
    """
    Parse a parameter file.

    Args:
        paramfile (str):
            The path to the parameter file (None for no file).

    Returns:
        dict:
            The parameter values.

    Raises:
        ValueError:
            If the file is not a mapping of parameter names to numbers.
    """
    params = {}

    # If we have no parameter file, return an empty dictionary
    if paramfile is None:
        return params

    with open(paramfile, "r") as file:
        try:
            contents = yaml.safe_load(file)
        except yaml.YAMLError as error:
            raise ValueError(f"{paramfile}: not valid yaml ({error})")

    # An empty file means no overrides
    if contents is None:
        return params

    if not isinstance(contents, dict):
        raise ValueError(
            f"{paramfile}: expected a mapping of parameters to numbers"
        )

    for key, value in contents.items():
        if not isinstance(key, str) or not PARAMETER_NAME.fullmatch(key):
            raise ValueError(
                f"{paramfile}: {key!r} is not a parameter name "
                "(upper case letters, digits and underscores)"
            )
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{paramfile}: {key} must be a number")
        params[key] = float(value)

    return params


def parse_index(index_path):
    """
    Parse a scenario index.

    Args:
        index_path (str):
            The path to index.yaml.

    Returns:
        dict:
            The {"duration": float, "seed": int} entry of each scenario.
    """
    with open(index_path, "r") as file:
        contents = yaml.safe_load(file) or {}

    index = {}
    for name, entry in contents.items():
        entry = entry or {}
        index[name] = {
            "duration": float(entry.get("duration", 10.0)),
            "seed": int(entry.get("seed", 0)),
            "description": entry.get("description", ""),
        }
    return index
