#-*- coding: utf-8 -*-
"""
This package infers home locations from raw GPS pings and classifies
residents' wildfire-evacuation behavior (decision and departure timing)
against evacuation-zone geometry and warning/order timelines.

The pipeline runs in stages, each in its own module:

 - C{L{evactrace.ingest}}: parse, clean and split pings, select residents
 - C{L{evactrace.home_inference}}: nighttime most-visited-cell homes
 - C{L{evactrace.scenario}}: fire, zones, tracts and home placement
 - C{L{evactrace.classifier}}: absence episodes and behavior labels
 - C{L{evactrace.metrics}}: compliance rates, response curves, regression
 - C{L{evactrace.synth}}: synthetic datasets with known ground truth

The C{evactrace} command (C{L{evactrace.cli}}) runs these stages from a
config file.

@license: Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at
    U{http://www.apache.org/licenses/LICENSE-2.0}

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions
    and limitations under the License.
"""

version_info = (0, 1, 0)

__version__ = ".".join(str(x) for x in version_info)

__all__ = [
    'classifier',
    'cli',
    'config',
    'evutil',
    'formats',
    'geo',
    'home_inference',
    'ingest',
    'kvform',
    'metrics',
    'pipeline',
    'plot',
    'scenario',
    'store',
    'synth',
    'timeutil',
]
