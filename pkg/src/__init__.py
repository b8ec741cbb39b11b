# Package marker for simulator modules.
