from flask import Blueprint

bp_distinguish = Blueprint('distinguish', __name__, cli_group=None)

from . import commands
