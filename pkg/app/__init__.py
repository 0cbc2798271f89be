from flask import Flask
from config import DevConfig


# application factory
def create_app(config_class=DevConfig):
    # create a flask instance
    app = Flask(__name__)
    app.config.from_object(config_class)

    # blueprints, each registering its cli commands at the top level
    from app.build import bp_build
    from app.prg import bp_prg
    from app.distinguish import bp_distinguish
    from app.verify import bp_verify
    from app.report import bp_report

    app.register_blueprint(bp_build)
    app.register_blueprint(bp_prg)
    app.register_blueprint(bp_distinguish)
    app.register_blueprint(bp_verify)
    app.register_blueprint(bp_report)

    return app
